use serde::{Deserialize, Serialize};

/// Side length of the maze interior.
pub const GRID: usize = 13;
/// Side length of an observation (interior plus a width-1 border).
pub const OBS: usize = GRID + 2;
/// Episode horizon shared by every grid environment.
pub const MAX_STEPS: u16 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub row: u8,
    pub col: u8,
}

impl Pos {
    /// The top-left interior cell.
    pub const CORNER: Pos = Pos { row: 0, col: 0 };

    pub const fn new(row: u8, col: u8) -> Pos {
        Pos { row, col }
    }

    pub fn in_bounds(self) -> bool {
        (self.row as usize) < GRID && (self.col as usize) < GRID
    }

    pub fn index(self) -> usize {
        self.row as usize * GRID + self.col as usize
    }

    pub fn from_index(i: usize) -> Pos {
        Pos::new((i / GRID) as u8, (i % GRID) as u8)
    }

    /// The neighbouring cell in direction `a`, if it lies inside the grid.
    pub fn neighbour(self, a: Action) -> Option<Pos> {
        let (r, c) = (self.row as i32, self.col as i32);
        let (r, c) = match a {
            Action::Up => (r - 1, c),
            Action::Left => (r, c - 1),
            Action::Down => (r + 1, c),
            Action::Right => (r, c + 1),
        };
        if (0..GRID as i32).contains(&r) && (0..GRID as i32).contains(&c) {
            Some(Pos::new(r as u8, c as u8))
        } else {
            None
        }
    }

    pub fn all() -> impl Iterator<Item = Pos> {
        (0..GRID * GRID).map(Pos::from_index)
    }
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// The four movement actions, in the canonical tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Up = 0,
    Left = 1,
    Down = 2,
    Right = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Left, Action::Down, Action::Right];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }
}

/// A 13x13 wall layout, one bit per cell.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Walls {
    rows: [u16; GRID],
}

impl Walls {
    pub fn empty() -> Walls {
        Walls::default()
    }

    /// Every cell outside the top-left `size`x`size` block is a wall.
    pub fn outside_region(size: usize) -> Walls {
        let mut w = Walls::empty();
        for p in Pos::all() {
            if p.row as usize >= size || p.col as usize >= size {
                w.set(p, true);
            }
        }
        w
    }

    pub fn is_wall(&self, p: Pos) -> bool {
        self.rows[p.row as usize] >> p.col & 1 == 1
    }

    pub fn set(&mut self, p: Pos, wall: bool) {
        if wall {
            self.rows[p.row as usize] |= 1 << p.col;
        } else {
            self.rows[p.row as usize] &= !(1 << p.col);
        }
    }

    pub fn toggle(&mut self, p: Pos) {
        self.rows[p.row as usize] ^= 1 << p.col;
    }

    pub fn count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn free_cells(&self) -> Vec<Pos> {
        Pos::all().filter(|&p| !self.is_wall(p)).collect()
    }

    /// Where the mouse ends up after attempting `a` from `p`.
    pub fn move_from(&self, p: Pos, a: Action) -> Pos {
        match p.neighbour(a) {
            Some(q) if !self.is_wall(q) => q,
            _ => p,
        }
    }
}

impl std::fmt::Debug for Walls {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..GRID {
            let line: String = (0..GRID)
                .map(|c| if self.is_wall(Pos::new(r as u8, c as u8)) { '#' } else { '.' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn movement_respects_edges_and_walls() {
        let mut w = Walls::empty();
        assert_eq!(w.move_from(Pos::CORNER, Action::Up), Pos::CORNER);
        assert_eq!(w.move_from(Pos::CORNER, Action::Left), Pos::CORNER);
        assert_eq!(w.move_from(Pos::CORNER, Action::Right), Pos::new(0, 1));
        w.set(Pos::new(1, 0), true);
        assert_eq!(w.move_from(Pos::CORNER, Action::Down), Pos::CORNER);
        assert_eq!(w.count(), 1);
        w.toggle(Pos::new(1, 0));
        assert_eq!(w.count(), 0);
    }

    #[test]
    fn region_walls() {
        let w = Walls::outside_region(3);
        assert_eq!(w.free_cells().len(), 9);
        assert!(w.is_wall(Pos::new(3, 0)));
        assert!(!w.is_wall(Pos::new(2, 2)));
    }
}
