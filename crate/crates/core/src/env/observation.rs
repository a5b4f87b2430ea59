use super::{EnvState, Level, Pos, Walls, GRID, OBS};
use crate::error::{Error, Result};

/// A `15 x 15 x c` Boolean grid, stored channel-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    channels: usize,
    bits: Vec<bool>,
}

/// What can be read back out of an observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedObservation {
    pub walls: Walls,
    pub mouse_pos: Pos,
    /// Remaining cheese (corner, dish) or remaining chests (keys).
    pub primary: Vec<Pos>,
    /// Remaining dish (dish) or remaining keys (keys).
    pub secondary: Vec<Pos>,
    pub inventory: usize,
}

fn interior(p: Pos) -> (usize, usize) {
    (p.row as usize + 1, p.col as usize + 1)
}

impl Observation {
    pub fn zeros(channels: usize) -> Observation {
        Observation { channels, bits: vec![false; channels * OBS * OBS] }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, ch: usize, row: usize, col: usize) -> bool {
        self.bits[(ch * OBS + row) * OBS + col]
    }

    fn set(&mut self, ch: usize, row: usize, col: usize) {
        self.bits[(ch * OBS + row) * OBS + col] = true;
    }

    fn mark(&mut self, ch: usize, p: Pos) {
        let (r, c) = interior(p);
        self.set(ch, r, c);
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Flat indices of the set cells, in increasing order.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    /// Canonical bit serialisation, eight cells per byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8) + 1];
        out[0] = self.channels as u8;
        for i in self.active() {
            out[1 + i / 8] |= 1 << (i % 8);
        }
        out
    }

    pub fn encode(level: &Level, s: &EnvState) -> Observation {
        let mut o = Observation::zeros(level.channels());
        let walls = level.walls();
        for r in 0..OBS {
            for c in 0..OBS {
                let border = r == 0 || c == 0 || r == OBS - 1 || c == OBS - 1;
                if border || walls.is_wall(Pos::new(r as u8 - 1, c as u8 - 1)) {
                    o.set(0, r, c);
                }
            }
        }
        o.mark(1, s.mouse_pos);
        match level {
            Level::Corner(l) => {
                if !s.cheese_collected {
                    o.mark(2, l.cheese_pos);
                }
            }
            Level::Dish(l) => {
                if !s.cheese_collected {
                    o.mark(2, l.cheese_pos);
                }
                if !s.dish_collected {
                    for ch in 0..l.dish_channels as usize {
                        o.mark(3 + ch, l.dish_pos);
                    }
                }
            }
            Level::Keys(l) => {
                for (i, &p) in l.chests.iter().enumerate() {
                    if s.chests_left >> i & 1 == 1 {
                        o.mark(2, p);
                    }
                }
                for (i, &p) in l.keys.iter().enumerate() {
                    if s.keys_left >> i & 1 == 1 {
                        o.mark(3, p);
                    }
                }
                for c in 0..s.inventory as usize {
                    o.set(4, 0, c);
                }
            }
        }
        o
    }

    fn cells(&self, ch: usize) -> Vec<Pos> {
        let mut v = Vec::new();
        for r in 1..=GRID {
            for c in 1..=GRID {
                if self.get(ch, r, c) {
                    v.push(Pos::new(r as u8 - 1, c as u8 - 1));
                }
            }
        }
        v
    }

    /// Invert [`Observation::encode`] for the given channel count.
    pub fn decode(&self) -> Result<DecodedObservation> {
        if self.channels < 3 {
            return Err(Error::Shape { expected: 3, got: self.channels });
        }
        let mut walls = Walls::empty();
        for p in Pos::all() {
            let (r, c) = interior(p);
            if self.get(0, r, c) {
                walls.set(p, true);
            }
        }
        let mice = self.cells(1);
        if mice.len() != 1 {
            return Err(Error::Contract(format!("mouse channel has {} set cells", mice.len())));
        }
        let primary = self.cells(2);
        let (secondary, inventory) = match self.channels {
            5 => (self.cells(3), (0..OBS).filter(|&c| self.get(4, 0, c)).count()),
            3 => (Vec::new(), 0),
            _ => (self.cells(3), 0),
        };
        Ok(DecodedObservation { walls, mouse_pos: mice[0], primary, secondary, inventory })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Action, DishLevel};

    fn dish() -> Level {
        Level::Dish(DishLevel {
            walls: Walls::empty(),
            mouse_spawn: Pos::new(3, 3),
            cheese_pos: Pos::new(3, 4),
            dish_pos: Pos::new(7, 7),
            dish_channels: 6,
        })
    }

    #[test]
    fn border_is_set() {
        let l = dish();
        let o = l.observe(&l.initial_state());
        for i in 0..OBS {
            assert!(o.get(0, 0, i) && o.get(0, OBS - 1, i) && o.get(0, i, 0) && o.get(0, i, OBS - 1));
        }
        assert!(!o.get(0, 1, 1));
    }

    #[test]
    fn dish_channels_replicated() {
        let l = dish();
        let o = l.observe(&l.initial_state());
        assert_eq!(o.channels(), 9);
        for ch in 3..9 {
            assert!(o.get(ch, 8, 8));
            assert_eq!(o.active().filter(|i| i / (OBS * OBS) == ch).count(), 1);
        }
    }

    #[test]
    fn collected_cheese_disappears() {
        let l = dish();
        let out = l.step(&l.initial_state(), Action::Right).unwrap();
        let o = l.observe(&out.state);
        assert!((0..OBS * OBS).all(|i| !o.get(2, i / OBS, i % OBS)));
        let d = o.decode().unwrap();
        assert!(d.primary.is_empty());
        assert_eq!(d.secondary, vec![Pos::new(7, 7)]);
    }

    #[test]
    fn byte_serialisation_distinguishes_states() {
        let l = dish();
        let s = l.initial_state();
        let t = l.step(&s, Action::Up).unwrap().state;
        assert_ne!(l.observe(&s).to_bytes(), l.observe(&t).to_bytes());
    }
}
