//! Per-cheese-cell evaluation over a fixed wall layout and spawn.

use crate::env::{Level, Pos, GRID};
use crate::error::{Error, Result};
use crate::learners::eval::evaluate_level;
use crate::learners::EvalProtocol;
use crate::rng::Seed;
use crate::solvers::max_return;
use crate::umdp::Policy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const HEATMAP_FORMAT: &str = "regret-lab-heatmap";
pub const HEATMAP_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub format: String,
    pub version: u32,
    /// The base level in the text level format.
    pub base_level: String,
    pub protocol: EvalProtocol,
    /// `true` on walls and on the spawn cell.
    pub masked: Vec<Vec<bool>>,
    /// Mean evaluation return with the cheese at each unmasked cell.
    pub values: Vec<Vec<Option<f64>>>,
    /// Oracle maximum return for the same levels.
    pub oracle: Vec<Vec<Option<f64>>>,
    /// Number of evaluated cells.
    pub cells: usize,
}

impl HeatmapGrid {
    pub fn masked_count(&self) -> usize {
        self.masked.iter().flatten().filter(|m| **m).count()
    }

    pub fn value(&self, p: Pos) -> Option<f64> {
        self.values[p.row as usize][p.col as usize]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<HeatmapGrid> {
        let g: HeatmapGrid = serde_json::from_str(text)?;
        if g.format != HEATMAP_FORMAT || g.version != HEATMAP_VERSION {
            return Err(Error::Version(format!("{} v{}", g.format, g.version)));
        }
        Ok(g)
    }
}

pub fn emit_heatmap(policy: &dyn Policy, base: &Level, protocol: &EvalProtocol, seed: Seed) -> Result<HeatmapGrid> {
    base.validate()?;
    protocol.validate()?;
    let Level::Corner(corner) = base else {
        return Err(Error::InvalidLevel("heatmaps need a corner level".into()));
    };
    let masked_at = |p: Pos| corner.walls.is_wall(p) || p == corner.mouse_spawn;
    let cells: Vec<Pos> = Pos::all().filter(|&p| !masked_at(p)).collect();
    let results = cells
        .par_iter()
        .map(|&p| {
            let level = Level::Corner(crate::env::CornerLevel { cheese_pos: p, ..corner.clone() });
            let v = evaluate_level(policy, &level, protocol, seed.index(p.index() as u64))?;
            Ok((p, v, max_return(&level, protocol.gamma)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![vec![None; GRID]; GRID];
    let mut oracle = vec![vec![None; GRID]; GRID];
    for (p, v, o) in results {
        values[p.row as usize][p.col as usize] = Some(v);
        oracle[p.row as usize][p.col as usize] = Some(o);
    }
    let masked = (0..GRID).map(|r| (0..GRID).map(|c| masked_at(Pos::new(r as u8, c as u8))).collect()).collect();
    Ok(HeatmapGrid {
        format: HEATMAP_FORMAT.into(),
        version: HEATMAP_VERSION,
        base_level: crate::env::format_level(base),
        protocol: *protocol,
        masked,
        values,
        oracle,
        cells: cells.len(),
    })
}
