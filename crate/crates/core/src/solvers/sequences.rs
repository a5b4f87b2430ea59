//! Viable key/chest collection sequences.

use crate::env::MAX_OBJECTS;
use crate::error::{Error, Result};

/// Refuse to materialise more sequences than this.
pub const SEQUENCE_CAP: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Item {
    Key(u8),
    Chest(u8),
}

/// A key m-permutation, a chest m-permutation and a Dyck word of order m.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CollectionSequence {
    pub keys: Vec<u8>,
    pub chests: Vec<u8>,
    /// `true` for a key step, `false` for a chest step.
    pub dyck: Vec<bool>,
}

impl CollectionSequence {
    /// Interleave the two permutations according to the Dyck word.
    pub fn items(&self) -> Vec<Item> {
        let (mut ki, mut ci) = (0, 0);
        self.dyck
            .iter()
            .map(|&is_key| {
                if is_key {
                    ki += 1;
                    Item::Key(self.keys[ki - 1])
                } else {
                    ci += 1;
                    Item::Chest(self.chests[ci - 1])
                }
            })
            .collect()
    }

    pub fn is_dyck(&self) -> bool {
        let mut bal = 0i32;
        for &k in &self.dyck {
            bal += if k { 1 } else { -1 };
            if bal < 0 {
                return false;
            }
        }
        bal == 0
    }
}

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

fn falling(n: u128, k: u128) -> u128 {
    (0..k).map(|i| n - i).product()
}

/// Closed-form count `C(k,m) m! * C(c,m) m! * Catalan(m)` with `m = min(k, c)`.
pub fn sequence_count(k: usize, c: usize) -> u128 {
    let m = k.min(c) as u128;
    let catalan = binom(2 * m, m) / (m + 1);
    falling(k as u128, m) * falling(c as u128, m) * catalan
}

fn permutations(n: usize, m: usize) -> Vec<Vec<u8>> {
    fn go(n: usize, m: usize, used: &mut Vec<bool>, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i as u8);
                go(n, m, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(n, m, &mut vec![false; n], &mut Vec::with_capacity(m), &mut out);
    out
}

/// All Dyck words of order `m`, lexicographically with keys first.
pub fn dyck_words(m: usize) -> Vec<Vec<bool>> {
    fn go(m: usize, open: usize, close: usize, cur: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if cur.len() == 2 * m {
            out.push(cur.clone());
            return;
        }
        if open < m {
            cur.push(true);
            go(m, open + 1, close, cur, out);
            cur.pop();
        }
        if close < open {
            cur.push(false);
            go(m, open, close + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(m, 0, 0, &mut Vec::with_capacity(2 * m), &mut out);
    out
}

pub fn enumerate_collection_sequences(k: usize, c: usize) -> Result<Vec<CollectionSequence>> {
    if !(1..=MAX_OBJECTS).contains(&k) || !(1..=MAX_OBJECTS).contains(&c) {
        return Err(Error::Config(format!("(k, c) = ({k}, {c}) outside 1..={MAX_OBJECTS}")));
    }
    let total = sequence_count(k, c);
    if total > SEQUENCE_CAP as u128 {
        return Err(Error::Capacity { what: "collection sequences", count: total.min(usize::MAX as u128) as usize, cap: SEQUENCE_CAP });
    }
    let m = k.min(c);
    let kp = permutations(k, m);
    let cp = permutations(c, m);
    let dw = dyck_words(m);
    let mut out = Vec::with_capacity(total as usize);
    for keys in &kp {
        for chests in &cp {
            for dyck in &dw {
                out.push(CollectionSequence { keys: keys.clone(), chests: chests.clone(), dyck: dyck.clone() });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_collection_sequences(1, 1).unwrap().len(), 1);
        let s = enumerate_collection_sequences(2, 2).unwrap();
        assert_eq!(s.len(), 8);
        assert!(s.iter().all(CollectionSequence::is_dyck));
        assert_eq!(sequence_count(3, 10), 21_600);
        assert_eq!(sequence_count(10, 3), 21_600);
    }

    #[test]
    fn dyck_words_are_catalan() {
        let cat = [1, 1, 2, 5, 14, 42];
        for (m, &c) in cat.iter().enumerate() {
            assert_eq!(dyck_words(m).len(), c);
        }
    }

    #[test]
    fn items_follow_the_word() {
        let s = CollectionSequence { keys: vec![2, 0, 1], chests: vec![0, 5, 3], dyck: vec![true, false, true, true, false, false] };
        assert_eq!(
            s.items(),
            vec![Item::Key(2), Item::Chest(0), Item::Key(0), Item::Key(1), Item::Chest(5), Item::Chest(3)]
        );
    }

    #[test]
    fn oversized_enumeration_refused() {
        assert!(matches!(enumerate_collection_sequences(10, 10), Err(Error::Capacity { .. })));
        assert!(enumerate_collection_sequences(0, 3).is_err());
    }
}
