//! Sparse Boolean feature vectors derived from observations.

use crate::env::{EnvState, Level, Observation, Pos, OBS};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureLayout {
    /// The flattened observation tensor.
    #[default]
    Flat,
    /// Every non-mouse channel re-indexed by offset from the mouse, so one
    /// weight covers "a wall directly above" wherever the mouse stands.
    Egocentric,
}

const WIN: usize = 2 * OBS - 1;

impl FeatureLayout {
    /// Number of features, including the trailing bias.
    pub fn dim(self, channels: usize) -> usize {
        match self {
            FeatureLayout::Flat => channels * OBS * OBS + 1,
            FeatureLayout::Egocentric => (channels - 1) * WIN * WIN + 1,
        }
    }
}

/// Set cells of the observation as `(channel, row, col)` in observation coordinates.
pub fn for_each_cell(level: &Level, s: &EnvState, mut f: impl FnMut(usize, usize, usize)) {
    let walls = level.walls();
    for r in 0..OBS {
        for c in 0..OBS {
            let border = r == 0 || c == 0 || r == OBS - 1 || c == OBS - 1;
            if border || walls.is_wall(Pos::new(r as u8 - 1, c as u8 - 1)) {
                f(0, r, c);
            }
        }
    }
    let at = |p: Pos| (p.row as usize + 1, p.col as usize + 1);
    let (mr, mc) = at(s.mouse_pos);
    f(1, mr, mc);
    match level {
        Level::Corner(l) => {
            if !s.cheese_collected {
                let (r, c) = at(l.cheese_pos);
                f(2, r, c);
            }
        }
        Level::Dish(l) => {
            if !s.cheese_collected {
                let (r, c) = at(l.cheese_pos);
                f(2, r, c);
            }
            if !s.dish_collected {
                let (r, c) = at(l.dish_pos);
                for ch in 0..l.dish_channels as usize {
                    f(3 + ch, r, c);
                }
            }
        }
        Level::Keys(l) => {
            for (i, &p) in l.chests.iter().enumerate() {
                if s.chests_left >> i & 1 == 1 {
                    let (r, c) = at(p);
                    f(2, r, c);
                }
            }
            for (i, &p) in l.keys.iter().enumerate() {
                if s.keys_left >> i & 1 == 1 {
                    let (r, c) = at(p);
                    f(3, r, c);
                }
            }
            for c in 0..s.inventory as usize {
                f(4, 0, c);
            }
        }
    }
}

/// Active feature indices (ending with the bias) written into `out`.
pub fn active_features(layout: FeatureLayout, level: &Level, s: &EnvState, out: &mut Vec<u32>) {
    out.clear();
    let channels = level.channels();
    match layout {
        FeatureLayout::Flat => for_each_cell(level, s, |ch, r, c| out.push(((ch * OBS + r) * OBS + c) as u32)),
        FeatureLayout::Egocentric => {
            let (mr, mc) = (s.mouse_pos.row as usize + 1, s.mouse_pos.col as usize + 1);
            for_each_cell(level, s, |ch, r, c| {
                if ch == 1 {
                    return;
                }
                let k = if ch == 0 { 0 } else { ch - 1 };
                let (dr, dc) = (r + OBS - 1 - mr, c + OBS - 1 - mc);
                out.push(((k * WIN + dr) * WIN + dc) as u32);
            });
            out.sort_unstable();
        }
    }
    out.push((layout.dim(channels) - 1) as u32);
}

/// Same as [`active_features`], read back from an observation tensor.
pub fn observation_features(layout: FeatureLayout, obs: &Observation) -> Result<Vec<u32>> {
    let channels = obs.channels();
    let mut out = Vec::new();
    match layout {
        FeatureLayout::Flat => out.extend(obs.active().map(|i| i as u32)),
        FeatureLayout::Egocentric => {
            let plane = OBS * OBS;
            let mice: Vec<usize> = obs.active().filter(|&i| i / plane == 1).collect();
            if mice.len() != 1 {
                return Err(Error::Contract(format!("mouse channel has {} set cells", mice.len())));
            }
            let (mr, mc) = ((mice[0] % plane) / OBS, mice[0] % OBS);
            for i in obs.active() {
                let (ch, r, c) = (i / plane, (i % plane) / OBS, i % OBS);
                if ch == 1 {
                    continue;
                }
                let k = if ch == 0 { 0 } else { ch - 1 };
                out.push(((k * WIN + r + OBS - 1 - mr) * WIN + c + OBS - 1 - mc) as u32);
            }
            out.sort_unstable();
        }
    }
    out.push((layout.dim(channels) - 1) as u32);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CornerLevel, KeysLevel, Walls};

    #[test]
    fn flat_matches_observation() {
        let mut w = Walls::empty();
        w.set(Pos::new(4, 4), true);
        let levels = [
            Level::Corner(CornerLevel { walls: w, mouse_spawn: Pos::new(2, 3), cheese_pos: Pos::new(9, 9) }),
            Level::Keys(KeysLevel { walls: w, mouse_spawn: Pos::new(0, 0), keys: vec![Pos::new(0, 1)], chests: vec![Pos::new(3, 3)] }),
        ];
        for l in &levels {
            let mut s = l.initial_state();
            s = l.transition(&s, crate::env::Action::Right).state;
            let obs: Vec<u32> = l.observe(&s).active().map(|i| i as u32).collect();
            let mut f = Vec::new();
            active_features(FeatureLayout::Flat, l, &s, &mut f);
            let bias = f.pop().unwrap();
            assert_eq!(bias as usize, FeatureLayout::Flat.dim(l.channels()) - 1);
            f.sort_unstable();
            assert_eq!(f, obs);
        }
    }

    #[test]
    fn egocentric_is_translation_invariant() {
        let mk = |m: Pos, ch: Pos| Level::Corner(CornerLevel { walls: Walls::empty(), mouse_spawn: m, cheese_pos: ch });
        let a = mk(Pos::new(5, 5), Pos::new(5, 7));
        let b = mk(Pos::new(6, 3), Pos::new(6, 5));
        let (mut fa, mut fb) = (Vec::new(), Vec::new());
        active_features(FeatureLayout::Egocentric, &a, &a.initial_state(), &mut fa);
        active_features(FeatureLayout::Egocentric, &b, &b.initial_state(), &mut fb);
        // The cheese feature (channel 2 maps to block 1) coincides; the border does not.
        let cheese = |f: &Vec<u32>| f.iter().copied().filter(|&i| (i as usize) >= WIN * WIN && (i as usize) < 2 * WIN * WIN).collect::<Vec<_>>();
        assert_eq!(cheese(&fa), cheese(&fb));
        assert_ne!(fa, fb);
    }

    #[test]
    fn observation_path_agrees() {
        let l = Level::Corner(CornerLevel { walls: Walls::empty(), mouse_spawn: Pos::new(3, 8), cheese_pos: Pos::new(1, 1) });
        let s = l.initial_state();
        for layout in [FeatureLayout::Flat, FeatureLayout::Egocentric] {
            let mut a = Vec::new();
            active_features(layout, &l, &s, &mut a);
            let mut b = observation_features(layout, &l.observe(&s)).unwrap();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }
}
