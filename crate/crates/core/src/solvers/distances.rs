use crate::env::{Pos, Walls, GRID, MAX_STEPS};
use std::collections::VecDeque;

/// Sentinel for "unreachable within the horizon".
pub const INF: u32 = 1_000_000_000;

const N: usize = GRID * GRID;

/// All-pairs shortest-path lengths over the free cells of a wall layout.
#[derive(Clone, PartialEq, Eq)]
pub struct DistanceTable {
    d: Vec<u32>,
}

impl std::fmt::Debug for DistanceTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DistanceTable({} finite entries)", self.d.iter().filter(|&&x| x < INF).count())
    }
}

impl DistanceTable {
    /// Floyd-Warshall on the 4-connected grid graph. Wall cells are isolated
    /// (distance 0 to themselves, infinite to everything else).
    pub fn floyd_warshall(walls: &Walls) -> DistanceTable {
        let mut d = vec![INF; N * N];
        for p in Pos::all() {
            let i = p.index();
            d[i * N + i] = 0;
            if walls.is_wall(p) {
                continue;
            }
            for a in crate::env::Action::ALL {
                if let Some(q) = p.neighbour(a) {
                    if !walls.is_wall(q) {
                        d[i * N + q.index()] = 1;
                    }
                }
            }
        }
        for k in 0..N {
            for i in 0..N {
                let dik = d[i * N + k];
                if dik >= INF {
                    continue;
                }
                for j in 0..N {
                    let via = dik + d[k * N + j];
                    if via < d[i * N + j] {
                        d[i * N + j] = via;
                    }
                }
            }
        }
        for x in &mut d {
            if *x > MAX_STEPS as u32 {
                *x = INF;
            }
        }
        DistanceTable { d }
    }

    pub fn get(&self, a: Pos, b: Pos) -> u32 {
        self.d[a.index() * N + b.index()]
    }

    pub fn reachable(&self, a: Pos, b: Pos) -> bool {
        self.get(a, b) < INF
    }

    /// SHA-256 over the table, as a short hex digest.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for x in &self.d {
            h.update(x.to_le_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Breadth-first distances from one source, with the same sentinel convention.
pub fn bfs_from(walls: &Walls, src: Pos) -> [u32; N] {
    let mut d = [INF; N];
    if walls.is_wall(src) {
        d[src.index()] = 0;
        return d;
    }
    d[src.index()] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(p) = q.pop_front() {
        let dp = d[p.index()];
        for a in crate::env::Action::ALL {
            if let Some(n) = p.neighbour(a) {
                if !walls.is_wall(n) && d[n.index()] == INF {
                    d[n.index()] = dp + 1;
                    q.push_back(n);
                }
            }
        }
    }
    for x in &mut d {
        if *x > MAX_STEPS as u32 {
            *x = INF;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_is_manhattan() {
        let t = DistanceTable::floyd_warshall(&Walls::empty());
        assert_eq!(t.get(Pos::CORNER, Pos::new(0, 4)), 4);
        assert_eq!(t.get(Pos::new(3, 7), Pos::new(9, 1)), 12);
        assert_eq!(t.get(Pos::new(5, 5), Pos::new(5, 5)), 0);
    }

    #[test]
    fn separating_column() {
        let mut w = Walls::empty();
        for r in 0..GRID as u8 {
            w.set(Pos::new(r, 6), true);
        }
        let t = DistanceTable::floyd_warshall(&w);
        assert_eq!(t.get(Pos::new(0, 0), Pos::new(0, 12)), INF);
        assert_eq!(t.get(Pos::new(0, 0), Pos::new(12, 5)), 17);
    }

    #[test]
    fn matches_bfs_on_a_wall_pattern() {
        let mut w = Walls::empty();
        for p in Pos::all() {
            if (p.row as usize * 7 + p.col as usize * 3) % 5 == 0 {
                w.set(p, true);
            }
        }
        let t = DistanceTable::floyd_warshall(&w);
        for s in w.free_cells() {
            let b = bfs_from(&w, s);
            for q in w.free_cells() {
                assert_eq!(t.get(s, q), b[q.index()]);
            }
        }
    }
}
