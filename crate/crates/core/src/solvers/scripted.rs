//! Hand-written reference policies used as fixtures.
//!
//! Navigation is greedy descent on breadth-first distance fields, breaking ties
//! in action order (Up, Left, Down, Right). Fields are cached per thread for
//! the most recent level, so rolling a policy out on one level costs one set
//! of searches.

use super::distances::{bfs_from, INF};
use super::oracle::{advance, dish_obstructed};
use crate::env::{Action, EnvState, Level, Pos, Walls, GRID};
use crate::umdp::Policy;
use fnv::FnvHashMap;
use std::cell::RefCell;
use std::rc::Rc;

type Field = [u32; GRID * GRID];

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Goal {
    True,
    Proxy,
}

/// Pursues the true or the proxy goal on every level.
#[derive(Clone, Copy, Debug)]
pub struct Scripted {
    pub goal: Goal,
    /// Discount used when ranking keys collection orders.
    pub gamma: f64,
}

impl Scripted {
    pub fn true_goal() -> Scripted {
        Scripted { goal: Goal::True, gamma: 0.999 }
    }
    pub fn proxy_goal() -> Scripted {
        Scripted { goal: Goal::Proxy, gamma: 0.999 }
    }
}

/// Takes the first blocked action, so the mouse never moves when it can help it.
#[derive(Clone, Copy, Debug)]
pub struct StandStill;

#[derive(Clone, Copy, Debug)]
pub struct Uniform;

fn one_hot(a: Action) -> [f64; 4] {
    let mut p = [0.0; 4];
    p[a.index()] = 1.0;
    p
}

impl Policy for StandStill {
    fn action_probs(&self, level: &Level, s: &EnvState) -> [f64; 4] {
        let a = Action::ALL.into_iter().find(|&a| level.walls().move_from(s.mouse_pos, a) == s.mouse_pos);
        one_hot(a.unwrap_or(Action::Up))
    }
}

impl Policy for Uniform {
    fn action_probs(&self, _: &Level, _: &EnvState) -> [f64; 4] {
        [0.25; 4]
    }
}

struct Nav {
    id: u64,
    /// Distance to the true target (corner, dish kinds).
    to_goal: Field,
    /// Distance to the proxy target.
    to_proxy: Field,
    avoid_for_goal: Option<Pos>,
    avoid_for_proxy: Option<Pos>,
    /// Keys: distance field from each key, then each chest.
    objects: Vec<Field>,
    positions: Vec<Pos>,
    plans: RefCell<FnvHashMap<EnvState, usize>>,
}

thread_local! {
    static CACHE: RefCell<Option<Rc<Nav>>> = const { RefCell::new(None) };
}

fn blocked(walls: &Walls, p: Option<Pos>) -> Walls {
    let mut w = *walls;
    if let Some(p) = p {
        w.set(p, true);
    }
    w
}

fn build(level: &Level, id: u64) -> Nav {
    let empty = [INF; GRID * GRID];
    let mut nav = Nav {
        id,
        to_goal: empty,
        to_proxy: empty,
        avoid_for_goal: None,
        avoid_for_proxy: None,
        objects: Vec::new(),
        positions: Vec::new(),
        plans: RefCell::new(FnvHashMap::default()),
    };
    match level {
        Level::Corner(l) => {
            nav.to_goal = bfs_from(&l.walls, l.cheese_pos);
            // Collecting the cheese ends the episode, so a proxy pursuer steers round it.
            nav.avoid_for_proxy = (l.cheese_pos != Pos::CORNER).then_some(l.cheese_pos);
            nav.to_proxy = bfs_from(&blocked(&l.walls, nav.avoid_for_proxy), Pos::CORNER);
        }
        Level::Dish(l) => {
            nav.to_goal = bfs_from(&dish_obstructed(l), l.cheese_pos);
            nav.avoid_for_goal = (l.dish_pos != l.cheese_pos).then_some(l.dish_pos);
            nav.avoid_for_proxy = (l.dish_pos != l.cheese_pos).then_some(l.cheese_pos);
            nav.to_proxy = bfs_from(&blocked(&l.walls, nav.avoid_for_proxy), l.dish_pos);
        }
        Level::Keys(l) => {
            nav.positions = l.keys.iter().chain(&l.chests).copied().collect();
            nav.objects = nav.positions.iter().map(|&p| bfs_from(&l.walls, p)).collect();
        }
    }
    nav
}

fn nav_for(level: &Level) -> Rc<Nav> {
    let id = level.id();
    CACHE.with(|c| {
        let mut c = c.borrow_mut();
        match &*c {
            Some(n) if n.id == id => n.clone(),
            _ => {
                let n = Rc::new(build(level, id));
                *c = Some(n.clone());
                n
            }
        }
    })
}

/// First action that strictly decreases the field, or `None` at the target or when unreachable.
fn descend(walls: &Walls, field: &Field, p: Pos) -> Option<Action> {
    let here = field[p.index()];
    if here >= INF || here == 0 {
        return None;
    }
    Action::ALL.into_iter().find(|&a| field[walls.move_from(p, a).index()] < here)
}

/// First action that does not enter `avoid`, preferring ones that keep the mouse still.
fn idle(walls: &Walls, p: Pos, avoid: Option<Pos>) -> Action {
    let ok = |a: Action| Some(walls.move_from(p, a)) != avoid;
    Action::ALL
        .into_iter()
        .find(|&a| walls.move_from(p, a) == p)
        .or_else(|| Action::ALL.into_iter().find(|&a| ok(a)))
        .unwrap_or(Action::Up)
}

struct PlanSearch<'a> {
    nav: &'a Nav,
    k: usize,
    c: usize,
    m: usize,
    gamma: f64,
    start: Pos,
    memo: FnvHashMap<(u16, u16, u8, u32), (f64, usize)>,
}

impl PlanSearch<'_> {
    fn leg(&self, from: usize, to: usize) -> u32 {
        let p = if from == usize::MAX { self.start } else { self.nav.positions[from] };
        self.nav.objects[to][p.index()]
    }

    /// Best additional return and the first object to head for.
    fn best(&mut self, keys: u16, chests: u16, inv: u32, opened: usize, from: usize, steps: u32) -> (f64, usize) {
        if opened == self.m || steps >= INF {
            return (0.0, usize::MAX);
        }
        let node = if from == usize::MAX { u8::MAX } else { from as u8 };
        if let Some(&v) = self.memo.get(&(keys, chests, node, steps)) {
            return v;
        }
        let mut b = (0.0f64, usize::MAX);
        if (opened + inv as usize) < self.m {
            for i in 0..self.k {
                if keys >> i & 1 == 1 {
                    let s = advance(steps, self.leg(from, i));
                    let v = self.best(keys & !(1 << i), chests, inv + 1, opened, i, s).0;
                    if v > b.0 {
                        b = (v, i);
                    }
                }
            }
        }
        if inv > 0 {
            for j in 0..self.c {
                if chests >> j & 1 == 1 {
                    let to = self.k + j;
                    let s = advance(steps, self.leg(from, to));
                    let r = if s >= INF { 0.0 } else { self.gamma.powi(s as i32 - 1) };
                    let v = r + self.best(keys, chests & !(1 << j), inv - 1, opened + 1, to, s).0;
                    if v > b.0 {
                        b = (v, to);
                    }
                }
            }
        }
        self.memo.insert((keys, chests, node, steps), b);
        b
    }
}

/// Head of the best remaining collection order from the current state.
fn keys_true(level: &crate::env::KeysLevel, nav: &Nav, s: &EnvState, gamma: f64) -> Option<usize> {
    let key = s.untimed();
    if let Some(&t) = nav.plans.borrow().get(&key) {
        return (t != usize::MAX).then_some(t);
    }
    let mut search = PlanSearch {
        nav,
        k: level.keys.len(),
        c: level.chests.len(),
        m: level.max_chests(),
        gamma,
        start: s.mouse_pos,
        memo: FnvHashMap::default(),
    };
    let (_, t) = search.best(s.keys_left, s.chests_left, s.inventory as u32, s.chests_opened as usize, usize::MAX, 0);
    nav.plans.borrow_mut().insert(key, t);
    (t != usize::MAX).then_some(t)
}

impl Policy for Scripted {
    fn action_probs(&self, level: &Level, s: &EnvState) -> [f64; 4] {
        let nav = nav_for(level);
        let walls = level.walls();
        let p = s.mouse_pos;
        let a = match (level, self.goal) {
            (Level::Corner(_) | Level::Dish(_), Goal::True) => {
                descend(walls, &nav.to_goal, p).unwrap_or_else(|| idle(walls, p, nav.avoid_for_goal))
            }
            (Level::Corner(_), Goal::Proxy) if s.corner_visited => idle(walls, p, nav.avoid_for_proxy),
            (Level::Corner(_) | Level::Dish(_), Goal::Proxy) => {
                descend(walls, &nav.to_proxy, p).unwrap_or_else(|| idle(walls, p, nav.avoid_for_proxy))
            }
            (Level::Keys(l), Goal::True) => keys_true(l, &nav, s, self.gamma)
                .and_then(|t| descend(walls, &nav.objects[t], p))
                .unwrap_or(Action::Up),
            (Level::Keys(l), Goal::Proxy) => keys_proxy(l, &nav, s).and_then(|t| descend(walls, &nav.objects[t], p)).unwrap_or(Action::Up),
        };
        one_hot(a)
    }
}

/// Nearest remaining key; once none is reachable, nearest remaining chest while holding a key.
fn keys_proxy(level: &crate::env::KeysLevel, nav: &Nav, s: &EnvState) -> Option<usize> {
    let p = s.mouse_pos.index();
    let nearest = |range: std::ops::Range<usize>, left: u16, offset: usize| {
        range
            .filter(|&i| left >> (i - offset) & 1 == 1 && nav.objects[i][p] < INF)
            .min_by_key(|&i| (nav.objects[i][p], i))
    };
    let k = level.keys.len();
    nearest(0..k, s.keys_left, 0).or_else(|| if s.inventory > 0 { nearest(k..k + level.chests.len(), s.chests_left, k) } else { None })
}
