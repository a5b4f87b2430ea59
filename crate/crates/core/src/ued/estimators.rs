//! Regret estimators used to score levels.

use super::buffer::BufferEntry;
use crate::env::Level;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Best return ever seen on the level minus the latest mean return.
    MaxLatest,
    /// Exact maximum return minus the latest mean return.
    OracleLatest,
    /// Negated latest mean return (maximin adversary).
    NegValue,
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-latest" | "max_latest" => Ok(Estimator::MaxLatest),
            "oracle-latest" | "oracle_latest" => Ok(Estimator::OracleLatest),
            "neg-value" | "neg_value" => Ok(Estimator::NegValue),
            other => Err(Error::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

fn mean(returns: &[f64]) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::Empty("latest batch returns"));
    }
    Ok(returns.iter().sum::<f64>() / returns.len() as f64)
}

/// Folds the batch into `max_seen_return` and returns `max(0, max_seen - mean)`.
pub fn estimate_max_latest(entry: &mut BufferEntry, returns: &[f64]) -> Result<f64> {
    let m = mean(returns)?;
    let best = returns.iter().copied().fold(entry.max_seen_return, f64::max);
    entry.max_seen_return = best;
    Ok((best - m).max(0.0))
}

pub fn estimate_oracle_latest(
    entry: &mut BufferEntry,
    returns: &[f64],
    oracle: &dyn Fn(&Level) -> Result<f64>,
) -> Result<f64> {
    let m = mean(returns)?;
    entry.max_seen_return = returns.iter().copied().fold(entry.max_seen_return, f64::max);
    let best = match entry.oracle_max {
        Some(v) => v,
        None => {
            let v = oracle(&entry.level)?;
            entry.oracle_max = Some(v);
            v
        }
    };
    Ok((best - m).max(0.0))
}

pub fn estimate_neg_value(entry: &mut BufferEntry, returns: &[f64]) -> Result<f64> {
    let m = mean(returns)?;
    entry.max_seen_return = returns.iter().copied().fold(entry.max_seen_return, f64::max);
    Ok(-m)
}

pub fn estimate(
    estimator: Estimator,
    entry: &mut BufferEntry,
    returns: &[f64],
    oracle: &dyn Fn(&Level) -> Result<f64>,
) -> Result<f64> {
    match estimator {
        Estimator::MaxLatest => estimate_max_latest(entry, returns),
        Estimator::OracleLatest => estimate_oracle_latest(entry, returns, oracle),
        Estimator::NegValue => estimate_neg_value(entry, returns),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CornerLevel, Pos, Walls};
    use crate::solvers::{max_return, StandStill};
    use crate::umdp::{exact_return, DiscountSpec, RewardSelector, DEFAULT_STATE_CAP};

    fn corner(cheese: Pos, walls: Walls) -> BufferEntry {
        BufferEntry::new(Level::Corner(CornerLevel { walls, mouse_spawn: Pos::new(4, 4), cheese_pos: cheese }), 0)
    }

    fn oracle(l: &Level) -> Result<f64> {
        Ok(max_return(l, 0.999))
    }

    #[test]
    fn max_latest_examples() {
        let mut e = corner(Pos::new(4, 7), Walls::empty());
        assert_eq!(estimate_max_latest(&mut e, &[0.0, 0.0]).unwrap(), 0.0);
        e.max_seen_return = 1.0;
        assert!((estimate_max_latest(&mut e, &[0.2]).unwrap() - 0.8).abs() < 1e-15);
        assert!(estimate_max_latest(&mut e, &[]).is_err());
        let best = 0.999f64.powi(2);
        let mut f = corner(Pos::new(4, 7), Walls::empty());
        estimate_max_latest(&mut f, &[best]).unwrap();
        assert_eq!(estimate_max_latest(&mut f, &[best, best]).unwrap(), 0.0);
    }

    #[test]
    fn oracle_latest_stand_still() {
        let mut e = corner(Pos::new(4, 7), Walls::empty());
        let d = DiscountSpec::default();
        let r = exact_return(&e.level.clone(), &StandStill, RewardSelector::True, d, DEFAULT_STATE_CAP).unwrap();
        let v = estimate_oracle_latest(&mut e, &[r], &oracle).unwrap();
        assert!((v - 0.998001).abs() < 1e-12);
        let mut w = Walls::empty();
        w.set(Pos::new(0, 1), true);
        w.set(Pos::new(1, 0), true);
        let mut u = corner(Pos::CORNER, w);
        assert_eq!(estimate_oracle_latest(&mut u, &[0.0], &oracle).unwrap(), 0.0);
    }

    #[test]
    fn neg_value_orders_unsolvable_first() {
        let mut e = corner(Pos::new(4, 7), Walls::empty());
        assert_eq!(estimate_neg_value(&mut e, &[0.0]).unwrap(), 0.0);
        assert_eq!(estimate_neg_value(&mut e, &[0.9]).unwrap(), -0.9);
        assert!(estimate_neg_value(&mut e, &[]).is_err());
    }
}
