//! Fixed-capacity prioritized level buffer.

use crate::env::Level;
use crate::error::{Error, Result};
use crate::solvers::{classify, Classification};
use serde::Serialize;

pub const DEFAULT_CAPACITY: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct BufferEntry {
    pub level: Level,
    pub score: f64,
    pub max_seen_return: f64,
    pub last_touched: u64,
    pub classification: Classification,
    /// Cached exact maximum return.
    pub oracle_max: Option<f64>,
    /// Insertion order, used to break ties.
    pub seq: u64,
}

impl BufferEntry {
    pub fn new(level: Level, iteration: u64) -> BufferEntry {
        let classification = classify(&level);
        BufferEntry { level, score: 0.0, max_seen_return: 0.0, last_touched: iteration, classification, oracle_max: None, seq: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InsertOutcome {
    Inserted,
    /// Inserted after evicting the level with this id.
    Evicted(u64),
    /// The level was already present; its statistics were refreshed.
    Refreshed,
    Rejected,
}

#[derive(Clone, Debug)]
pub struct LevelBuffer {
    capacity: usize,
    entries: Vec<BufferEntry>,
    pub iteration: u64,
    next_seq: u64,
}

impl LevelBuffer {
    pub fn new(capacity: usize) -> Result<LevelBuffer> {
        if capacity == 0 {
            return Err(Error::Config("buffer capacity must be positive".into()));
        }
        Ok(LevelBuffer { capacity, entries: Vec::new(), iteration: 0, next_seq: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BufferEntry] {
        &self.entries
    }

    pub fn entry_mut(&mut self, i: usize) -> &mut BufferEntry {
        &mut self.entries[i]
    }

    pub fn position(&self, id: u64) -> Option<usize> {
        self.entries.iter().position(|e| e.level.id() == id)
    }

    /// Index of the lowest-priority entry: minimum score, oldest first on ties.
    pub fn lowest(&self) -> Option<usize> {
        (0..self.entries.len()).min_by(|&a, &b| {
            let (x, y) = (&self.entries[a], &self.entries[b]);
            x.score.total_cmp(&y.score).then(x.seq.cmp(&y.seq))
        })
    }

    /// Add a scored level. A level already present is refreshed in place; a
    /// full buffer admits the level only if it beats the current minimum score.
    pub fn insert_if_better(&mut self, mut entry: BufferEntry) -> InsertOutcome {
        if let Some(i) = self.position(entry.level.id()) {
            let e = &mut self.entries[i];
            e.score = entry.score;
            e.max_seen_return = e.max_seen_return.max(entry.max_seen_return);
            e.last_touched = entry.last_touched;
            e.oracle_max = e.oracle_max.or(entry.oracle_max);
            return InsertOutcome::Refreshed;
        }
        entry.seq = self.next_seq;
        if self.entries.len() < self.capacity {
            self.next_seq += 1;
            self.entries.push(entry);
            return InsertOutcome::Inserted;
        }
        let lo = self.lowest().expect("full buffer is nonempty");
        if entry.score > self.entries[lo].score {
            self.next_seq += 1;
            let old = std::mem::replace(&mut self.entries[lo], entry);
            InsertOutcome::Evicted(old.level.id())
        } else {
            InsertOutcome::Rejected
        }
    }

    /// Replay probabilities `(1 - rho) P_rank + rho P_stale`.
    ///
    /// `P_rank(i)` is proportional to `rank_i^(-1/temperature)` with rank 1 the
    /// highest score (earlier insertion wins ties); `P_stale(i)` is proportional
    /// to `iteration - last_touched`, and uniform when every entry is fresh.
    pub fn replay_distribution(&self, temperature: f64, staleness_coeff: f64) -> Result<Vec<f64>> {
        if self.entries.is_empty() {
            return Err(Error::Empty("level buffer"));
        }
        if !(temperature > 0.0) || !(0.0..=1.0).contains(&staleness_coeff) {
            return Err(Error::Config(format!("bad temperature {temperature} or staleness {staleness_coeff}")));
        }
        let n = self.entries.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (&self.entries[a], &self.entries[b]);
            y.score.total_cmp(&x.score).then(x.seq.cmp(&y.seq))
        });
        let mut rank = vec![0.0; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = ((r + 1) as f64).powf(-1.0 / temperature);
        }
        let rs: f64 = rank.iter().sum();
        let stale: Vec<f64> = self.entries.iter().map(|e| self.iteration.saturating_sub(e.last_touched) as f64).collect();
        let ss: f64 = stale.iter().sum();
        Ok((0..n)
            .map(|i| {
                let ps = if ss > 0.0 { stale[i] / ss } else { 1.0 / n as f64 };
                (1.0 - staleness_coeff) * rank[i] / rs + staleness_coeff * ps
            })
            .collect())
    }

    pub fn fraction(&self, pred: impl Fn(&BufferEntry) -> bool) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().filter(|e| pred(e)).count() as f64 / self.entries.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CornerLevel, Pos, Walls};

    fn entry(col: u8, score: f64) -> BufferEntry {
        let l = Level::Corner(CornerLevel { walls: Walls::empty(), mouse_spawn: Pos::new(6, 6), cheese_pos: Pos::new(0, col) });
        BufferEntry { score, ..BufferEntry::new(l, 0) }
    }

    #[test]
    fn single_entry_probability_one() {
        let mut b = LevelBuffer::new(4).unwrap();
        assert!(b.replay_distribution(0.1, 0.1).is_err());
        b.insert_if_better(entry(1, 0.3));
        assert_eq!(b.replay_distribution(0.1, 0.1).unwrap(), vec![1.0]);
    }

    #[test]
    fn rank_weights() {
        let mut b = LevelBuffer::new(4).unwrap();
        b.insert_if_better(entry(1, 0.5));
        b.insert_if_better(entry(2, 1.0));
        let p = b.replay_distribution(0.1, 0.0).unwrap();
        let top = 1.0 / (1.0 + 2f64.powi(-10));
        assert!((p[1] - top).abs() < 1e-15 && p[1] > 0.999);
        b.iteration = 10;
        b.entries[0].last_touched = 7;
        b.entries[1].last_touched = 9;
        let p = b.replay_distribution(0.1, 1.0).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn eviction_is_lowest_oldest() {
        let mut b = LevelBuffer::new(3).unwrap();
        for (c, s) in [(1, 0.2), (2, 0.1), (3, 0.1)] {
            assert_eq!(b.insert_if_better(entry(c, s)), InsertOutcome::Inserted);
        }
        assert_eq!(b.insert_if_better(entry(4, 0.1)), InsertOutcome::Rejected);
        let old = entry(2, 0.0).level.id();
        assert_eq!(b.insert_if_better(entry(5, 0.15)), InsertOutcome::Evicted(old));
        assert_eq!(b.insert_if_better(entry(1, 0.9)), InsertOutcome::Refreshed);
        assert_eq!(b.len(), 3);
        assert_eq!(b.entries()[b.lowest().unwrap()].level, entry(3, 0.0).level);
    }
}
