//! Exact maximum true-goal return per level.

use super::distances::{bfs_from, INF};
use crate::env::{CornerLevel, DishLevel, KeysLevel, Level, Pos, Walls, MAX_STEPS};
use fnv::FnvHashMap;

/// `gamma^(d-1)` for a shortest path of length `d`, zero when unreachable.
pub fn path_return(d: u32, gamma: f64) -> f64 {
    if d >= INF || d == 0 {
        0.0
    } else {
        gamma.powi(d as i32 - 1)
    }
}

/// Walls as seen by a mouse that must not touch the dish.
pub fn dish_obstructed(level: &DishLevel) -> Walls {
    let mut w = level.walls;
    if level.dish_pos != level.cheese_pos {
        w.set(level.dish_pos, true);
    }
    w
}

pub fn max_return_corner(level: &CornerLevel, gamma: f64) -> f64 {
    let d = bfs_from(&level.walls, level.mouse_spawn)[level.cheese_pos.index()];
    path_return(d, gamma)
}

pub fn max_return_dish(level: &DishLevel, gamma: f64) -> f64 {
    let d = bfs_from(&dish_obstructed(level), level.mouse_spawn)[level.cheese_pos.index()];
    path_return(d, gamma)
}

/// Pairwise distances among spawn (node 0), keys (1..=k) and chests (k+1..).
pub fn object_distances(level: &KeysLevel) -> (Vec<Pos>, Vec<Vec<u32>>) {
    let mut nodes = vec![level.mouse_spawn];
    nodes.extend(&level.keys);
    nodes.extend(&level.chests);
    let d = nodes
        .iter()
        .map(|&p| {
            let row = bfs_from(&level.walls, p);
            nodes.iter().map(|q| row[q.index()]).collect()
        })
        .collect();
    (nodes, d)
}

/// Cumulative step count after one more leg, with the horizon cap.
pub fn advance(steps: u32, leg: u32) -> u32 {
    if steps >= INF || leg >= INF {
        return INF;
    }
    let s = steps + leg;
    if s > MAX_STEPS as u32 {
        INF
    } else {
        s
    }
}

struct KeysSearch<'a> {
    k: usize,
    c: usize,
    m: usize,
    d: &'a [Vec<u32>],
    gamma: f64,
    memo: FnvHashMap<(u16, u16, u8, u32), f64>,
}

impl KeysSearch<'_> {
    /// Best additional return over every completion of a partial sequence.
    fn best(&mut self, keys: u16, chests: u16, node: usize, steps: u32) -> f64 {
        let nk = keys.count_ones() as usize;
        let nc = chests.count_ones() as usize;
        if nc == self.m || steps >= INF {
            return 0.0;
        }
        let key = (keys, chests, node as u8, steps);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let mut best = 0.0f64;
        if nk < self.m {
            for i in 0..self.k {
                if keys >> i & 1 == 0 {
                    let s = advance(steps, self.d[node][1 + i]);
                    best = best.max(self.best(keys | 1 << i, chests, 1 + i, s));
                }
            }
        }
        if nk > nc {
            for j in 0..self.c {
                if chests >> j & 1 == 0 {
                    let to = 1 + self.k + j;
                    let s = advance(steps, self.d[node][to]);
                    let r = if s >= INF { 0.0 } else { self.gamma.powi(s as i32 - 1) };
                    best = best.max(r + self.best(keys, chests | 1 << j, to, s));
                }
            }
        }
        self.memo.insert(key, best);
        best
    }
}

/// Maximum over all viable collection sequences of the summed chest rewards.
pub fn max_return_keys(level: &KeysLevel, gamma: f64) -> f64 {
    let (_, d) = object_distances(level);
    let mut search = KeysSearch {
        k: level.keys.len(),
        c: level.chests.len(),
        m: level.max_chests(),
        d: &d,
        gamma,
        memo: FnvHashMap::default(),
    };
    search.best(0, 0, 0, 0)
}

pub fn max_return(level: &Level, gamma: f64) -> f64 {
    match level {
        Level::Corner(l) => max_return_corner(l, gamma),
        Level::Dish(l) => max_return_dish(l, gamma),
        Level::Keys(l) => max_return_keys(l, gamma),
    }
}
