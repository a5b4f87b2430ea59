//! The three grid-world UMDPs: cheese in the corner, cheese on a dish, and
//! keys and chests.
//!
//! Levels and states are plain values and all dynamics are pure functions, so
//! batched rollouts can run in parallel without coordination.

mod format;
mod grid;
mod observation;

pub use format::{format_level, format_levels, parse_levels, LEVELS_HEADER};
pub use grid::{Action, Pos, Walls, GRID, MAX_STEPS, OBS};
pub use observation::{DecodedObservation, Observation};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};

/// Default number of redundant dish channels.
pub const DEFAULT_DISH_CHANNELS: u8 = 6;
/// Upper bound on keys and on chests in a level.
pub const MAX_OBJECTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Corner,
    Dish,
    Keys,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Corner => "corner",
            EnvKind::Dish => "dish",
            EnvKind::Keys => "keys",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corner" => Ok(EnvKind::Corner),
            "dish" => Ok(EnvKind::Dish),
            "keys" => Ok(EnvKind::Keys),
            other => Err(Error::Config(format!("unknown environment `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CornerLevel {
    pub walls: Walls,
    pub mouse_spawn: Pos,
    pub cheese_pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DishLevel {
    pub walls: Walls,
    pub mouse_spawn: Pos,
    pub cheese_pos: Pos,
    pub dish_pos: Pos,
    pub dish_channels: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KeysLevel {
    pub walls: Walls,
    pub mouse_spawn: Pos,
    pub keys: Vec<Pos>,
    pub chests: Vec<Pos>,
}

impl KeysLevel {
    /// Maximum number of chests that can be opened, `min(k, c)`.
    pub fn max_chests(&self) -> usize {
        self.keys.len().min(self.chests.len())
    }
}

/// A fully specified level of one of the three environments.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Corner(CornerLevel),
    Dish(DishLevel),
    Keys(KeysLevel),
}

/// Mouse position plus everything needed to make the rewards Markovian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnvState {
    pub mouse_pos: Pos,
    pub cheese_collected: bool,
    pub dish_collected: bool,
    /// Corner environment: the proxy goal has already fired.
    pub corner_visited: bool,
    /// Bit `i` set while key `i` is still on the grid.
    pub keys_left: u16,
    /// Bit `i` set while chest `i` is still on the grid.
    pub chests_left: u16,
    pub inventory: u8,
    pub chests_opened: u8,
    pub step: u16,
}

impl EnvState {
    /// The state with the step counter cleared, used as a key when the
    /// horizon is handled separately.
    pub fn untimed(mut self) -> EnvState {
        self.step = 0;
        self
    }

    pub fn keys_on_grid(&self) -> u32 {
        self.keys_left.count_ones()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub true_reward: f64,
    pub proxy_reward: f64,
    pub done: bool,
}

fn full_mask(n: usize) -> u16 {
    ((1u32 << n) - 1) as u16
}

impl Level {
    pub fn kind(&self) -> EnvKind {
        match self {
            Level::Corner(_) => EnvKind::Corner,
            Level::Dish(_) => EnvKind::Dish,
            Level::Keys(_) => EnvKind::Keys,
        }
    }

    pub fn walls(&self) -> &Walls {
        match self {
            Level::Corner(l) => &l.walls,
            Level::Dish(l) => &l.walls,
            Level::Keys(l) => &l.walls,
        }
    }

    pub fn walls_mut(&mut self) -> &mut Walls {
        match self {
            Level::Corner(l) => &mut l.walls,
            Level::Dish(l) => &mut l.walls,
            Level::Keys(l) => &mut l.walls,
        }
    }

    pub fn mouse_spawn(&self) -> Pos {
        match self {
            Level::Corner(l) => l.mouse_spawn,
            Level::Dish(l) => l.mouse_spawn,
            Level::Keys(l) => l.mouse_spawn,
        }
    }

    pub fn set_mouse_spawn(&mut self, p: Pos) {
        match self {
            Level::Corner(l) => l.mouse_spawn = p,
            Level::Dish(l) => l.mouse_spawn = p,
            Level::Keys(l) => l.mouse_spawn = p,
        }
    }

    /// Cells holding the spawn or an object.
    pub fn occupied(&self) -> Vec<Pos> {
        match self {
            Level::Corner(l) => vec![l.mouse_spawn, l.cheese_pos],
            Level::Dish(l) => vec![l.mouse_spawn, l.cheese_pos, l.dish_pos],
            Level::Keys(l) => {
                let mut v = vec![l.mouse_spawn];
                v.extend(&l.keys);
                v.extend(&l.chests);
                v
            }
        }
    }

    /// Number of observation channels.
    pub fn channels(&self) -> usize {
        match self {
            Level::Corner(_) => 3,
            Level::Dish(l) => 3 + l.dish_channels as usize,
            Level::Keys(_) => 5,
        }
    }

    /// Stable 64-bit identifier of the level's contents.
    pub fn id(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        self.hash(&mut h);
        h.finish()
    }

    pub fn validate(&self) -> Result<()> {
        let walls = self.walls();
        let check = |what: &str, p: Pos| -> Result<()> {
            if !p.in_bounds() {
                return Err(Error::InvalidLevel(format!("{what} at {p} is outside the grid")));
            }
            if walls.is_wall(p) {
                return Err(Error::InvalidLevel(format!("{what} at {p} is on a wall")));
            }
            Ok(())
        };
        check("mouse spawn", self.mouse_spawn())?;
        match self {
            Level::Corner(l) => {
                check("cheese", l.cheese_pos)?;
                if l.cheese_pos == l.mouse_spawn {
                    return Err(Error::InvalidLevel("cheese coincides with mouse spawn".into()));
                }
            }
            Level::Dish(l) => {
                check("cheese", l.cheese_pos)?;
                check("dish", l.dish_pos)?;
                if l.cheese_pos == l.mouse_spawn || l.dish_pos == l.mouse_spawn {
                    return Err(Error::InvalidLevel("object coincides with mouse spawn".into()));
                }
                if l.dish_channels == 0 {
                    return Err(Error::InvalidLevel("dish needs at least one channel".into()));
                }
            }
            Level::Keys(l) => {
                for (name, objs) in [("keys", &l.keys), ("chests", &l.chests)] {
                    if objs.is_empty() || objs.len() > MAX_OBJECTS {
                        return Err(Error::InvalidLevel(format!(
                            "{name}: count {} outside 1..={MAX_OBJECTS}",
                            objs.len()
                        )));
                    }
                }
                for &p in l.keys.iter().chain(&l.chests) {
                    check("object", p)?;
                }
                let mut all = self.occupied();
                all.sort();
                if all.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidLevel("spawn, key and chest positions must be distinct".into()));
                }
            }
        }
        Ok(())
    }

    pub fn reset(&self) -> Result<EnvState> {
        self.validate()?;
        Ok(self.initial_state())
    }

    /// Initial state without validation; callers must know the level is valid.
    pub fn initial_state(&self) -> EnvState {
        let mut s = EnvState {
            mouse_pos: self.mouse_spawn(),
            cheese_collected: false,
            dish_collected: false,
            corner_visited: false,
            keys_left: 0,
            chests_left: 0,
            inventory: 0,
            chests_opened: 0,
            step: 0,
        };
        match self {
            // Spawning in the corner counts as the visit; no reward is emitted.
            Level::Corner(l) => s.corner_visited = l.mouse_spawn == Pos::CORNER,
            Level::Dish(_) => {}
            Level::Keys(l) => {
                s.keys_left = full_mask(l.keys.len());
                s.chests_left = full_mask(l.chests.len());
            }
        }
        s
    }

    /// Whether the goal-driven termination condition holds (ignores the horizon).
    pub fn goal_done(&self, s: &EnvState) -> bool {
        match self {
            Level::Corner(_) => s.cheese_collected,
            Level::Dish(_) => s.cheese_collected || s.dish_collected,
            Level::Keys(l) => s.chests_opened as usize >= l.max_chests(),
        }
    }

    pub fn is_terminal(&self, s: &EnvState) -> bool {
        s.step >= MAX_STEPS || self.goal_done(s)
    }

    /// Advance one step. Stepping a terminal state is a contract error.
    pub fn step(&self, s: &EnvState, a: Action) -> Result<StepOutcome> {
        if self.is_terminal(s) {
            return Err(Error::Contract(format!("step called on terminal state at step {}", s.step)));
        }
        Ok(self.transition(s, a))
    }

    /// One step of the dynamics without the terminal check.
    pub fn transition(&self, s: &EnvState, a: Action) -> StepOutcome {
        let mut n = *s;
        n.mouse_pos = self.walls().move_from(s.mouse_pos, a);
        n.step = s.step + 1;
        let (mut r_true, mut r_proxy) = (0.0, 0.0);
        let here = n.mouse_pos;
        match self {
            Level::Corner(l) => {
                if here == l.cheese_pos {
                    n.cheese_collected = true;
                    r_true = 1.0;
                }
                if here == Pos::CORNER && !n.corner_visited {
                    n.corner_visited = true;
                    r_proxy = 1.0;
                }
            }
            Level::Dish(l) => {
                // Cheese is checked before the dish; when co-located both fire.
                if here == l.cheese_pos {
                    n.cheese_collected = true;
                    r_true = 1.0;
                }
                if here == l.dish_pos {
                    n.dish_collected = true;
                    r_proxy = 1.0;
                }
            }
            Level::Keys(l) => {
                if let Some(i) = l.keys.iter().position(|&k| k == here) {
                    if n.keys_left >> i & 1 == 1 {
                        n.keys_left &= !(1 << i);
                        n.inventory += 1;
                        r_proxy = 1.0;
                    }
                }
                if let Some(i) = l.chests.iter().position(|&c| c == here) {
                    if n.chests_left >> i & 1 == 1 && n.inventory > 0 {
                        n.chests_left &= !(1 << i);
                        n.inventory -= 1;
                        n.chests_opened += 1;
                        r_true = 1.0;
                        r_proxy = 1.0;
                    }
                }
            }
        }
        let done = self.is_terminal(&n);
        StepOutcome { state: n, true_reward: r_true, proxy_reward: r_proxy, done }
    }

    pub fn observe(&self, s: &EnvState) -> Observation {
        Observation::encode(self, s)
    }

    /// Position of the true-goal object for the single-goal environments.
    pub fn cheese_pos(&self) -> Option<Pos> {
        match self {
            Level::Corner(l) => Some(l.cheese_pos),
            Level::Dish(l) => Some(l.cheese_pos),
            Level::Keys(_) => None,
        }
    }

    pub fn as_corner(&self) -> Option<&CornerLevel> {
        match self {
            Level::Corner(l) => Some(l),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner(spawn: Pos, cheese: Pos) -> Level {
        Level::Corner(CornerLevel { walls: Walls::empty(), mouse_spawn: spawn, cheese_pos: cheese })
    }

    fn keys_level() -> KeysLevel {
        KeysLevel {
            walls: Walls::empty(),
            mouse_spawn: Pos::new(5, 5),
            keys: vec![Pos::new(5, 6), Pos::new(5, 7)],
            chests: vec![Pos::new(6, 5), Pos::new(7, 5), Pos::new(8, 5)],
        }
    }

    #[test]
    fn reset_places_mouse_at_spawn() {
        let l = corner(Pos::new(4, 4), Pos::new(6, 6));
        let s = l.reset().unwrap();
        assert_eq!(s.mouse_pos, Pos::new(4, 4));
        assert_eq!(s.step, 0);
        assert!(!s.corner_visited && !s.cheese_collected);
    }

    #[test]
    fn keys_reset_state() {
        let mut k = keys_level();
        k.keys.push(Pos::new(5, 8));
        let s = Level::Keys(k).reset().unwrap();
        assert_eq!(s.inventory, 0);
        assert_eq!(s.keys_on_grid(), 3);
    }

    #[test]
    fn dish_colocated_reset() {
        let l = Level::Dish(DishLevel {
            walls: Walls::empty(),
            mouse_spawn: Pos::new(2, 2),
            cheese_pos: Pos::new(2, 3),
            dish_pos: Pos::new(2, 3),
            dish_channels: 6,
        });
        let s = l.reset().unwrap();
        assert!(!s.cheese_collected && !s.dish_collected);
        let out = l.step(&s, Action::Right).unwrap();
        assert_eq!((out.true_reward, out.proxy_reward, out.done), (1.0, 1.0, true));
    }

    #[test]
    fn corner_cheese_collection_terminates() {
        let l = corner(Pos::new(4, 4), Pos::new(4, 5));
        let s = l.reset().unwrap();
        let out = l.step(&s, Action::Right).unwrap();
        assert_eq!(out.true_reward, 1.0);
        assert!(out.done);
        assert!(matches!(l.step(&out.state, Action::Up), Err(Error::Contract(_))));
    }

    #[test]
    fn corner_proxy_fires_once() {
        let l = corner(Pos::new(0, 1), Pos::new(6, 6));
        let s = l.reset().unwrap();
        let o1 = l.step(&s, Action::Left).unwrap();
        assert_eq!((o1.true_reward, o1.proxy_reward, o1.done), (0.0, 1.0, false));
        let o2 = l.step(&o1.state, Action::Right).unwrap();
        let o3 = l.step(&o2.state, Action::Left).unwrap();
        assert_eq!(o3.proxy_reward, 0.0);
    }

    #[test]
    fn spawn_in_corner_marks_visit() {
        let l = corner(Pos::CORNER, Pos::new(3, 3));
        let s = l.reset().unwrap();
        assert!(s.corner_visited);
        let o = l.step(&s, Action::Up).unwrap();
        assert_eq!(o.proxy_reward, 0.0);
    }

    #[test]
    fn chest_needs_a_key() {
        let l = Level::Keys(keys_level());
        let s = l.reset().unwrap();
        // Down onto chest 0 with empty inventory: nothing happens.
        let o = l.step(&s, Action::Down).unwrap();
        assert_eq!(o.state.inventory, 0);
        assert_eq!(o.state.chests_left, 0b111);
        assert_eq!(o.true_reward, 0.0);
    }

    #[test]
    fn chest_consumes_a_key() {
        let l = Level::Keys(keys_level());
        let mut s = l.reset().unwrap();
        for a in [Action::Right, Action::Right] {
            s = l.step(&s, a).unwrap().state;
        }
        assert_eq!(s.inventory, 2);
        for a in [Action::Left, Action::Left, Action::Down] {
            s = l.step(&s, a).unwrap().state;
        }
        // Now on chest 0 with one key spent.
        assert_eq!(s.inventory, 1);
        assert_eq!(s.chests_opened, 1);
        assert_eq!(s.chests_left, 0b110);
        let o = l.step(&s, Action::Down).unwrap();
        assert_eq!(o.true_reward, 1.0);
        assert_eq!(o.state.inventory, 0);
        assert!(o.done, "min(k, c) = 2 chests opened");
    }

    #[test]
    fn horizon_terminates() {
        let mut walls = Walls::empty();
        walls.set(Pos::new(0, 1), true);
        walls.set(Pos::new(1, 0), true);
        let l = Level::Corner(CornerLevel { walls, mouse_spawn: Pos::new(5, 5), cheese_pos: Pos::CORNER });
        let mut s = l.reset().unwrap();
        let mut n = 0;
        loop {
            let o = l.step(&s, Action::Up).unwrap();
            n += 1;
            s = o.state;
            if o.done {
                break;
            }
        }
        assert_eq!(n, MAX_STEPS as usize);
    }

    #[test]
    fn validation_errors() {
        let mut walls = Walls::empty();
        walls.set(Pos::new(3, 3), true);
        let l = Level::Corner(CornerLevel { walls, mouse_spawn: Pos::new(3, 3), cheese_pos: Pos::CORNER });
        assert!(matches!(l.reset(), Err(Error::InvalidLevel(_))));
        let l = corner(Pos::new(1, 1), Pos::new(1, 1));
        assert!(l.validate().is_err());
        let l = corner(Pos::new(13, 1), Pos::new(1, 1));
        assert!(l.validate().is_err());
        let mut k = keys_level();
        k.chests[0] = k.keys[0];
        assert!(Level::Keys(k).validate().is_err());
    }
}
