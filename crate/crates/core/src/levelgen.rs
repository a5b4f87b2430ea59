//! Procedural level generators, train-time mixtures and elementary edits.
//!
//! Placement order is fixed: walls, then the mouse spawn, then goal objects,
//! each position drawn uniformly from the cells still free. A draw that runs
//! out of free cells restarts from the walls, up to [`MAX_ATTEMPTS`] times.

use crate::env::{CornerLevel, DishLevel, EnvKind, KeysLevel, Level, Pos, Walls, DEFAULT_DISH_CHANNELS, GRID};
use crate::error::{Error, Result};
use crate::rng::{Rng, Seed};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenClass {
    NonDistinguishing,
    Distinguishing,
}

impl std::str::FromStr for GenClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nd" | "non_distinguishing" | "non-distinguishing" => Ok(GenClass::NonDistinguishing),
            "d" | "distinguishing" => Ok(GenClass::Distinguishing),
            other => Err(Error::Config(format!("unknown generator class `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSpec {
    pub env: EnvKind,
    pub class: GenClass,
    pub wall_probability: f64,
    /// Side of the top-left block the level lives in; cells outside it are walls.
    pub active_region: usize,
    /// Corner distinguishing generator: side of the top-left block the cheese is drawn from.
    pub corner_region: usize,
    pub dish_channels: u8,
    /// Keys: override the class's (keys, chests) counts.
    pub keys_counts: Option<(usize, usize)>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            env: EnvKind::Corner,
            class: GenClass::NonDistinguishing,
            wall_probability: 0.25,
            active_region: GRID,
            corner_region: GRID,
            dish_channels: DEFAULT_DISH_CHANNELS,
            keys_counts: None,
        }
    }
}

impl GeneratorSpec {
    pub fn new(env: EnvKind, class: GenClass) -> GeneratorSpec {
        GeneratorSpec { env, class, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.wall_probability) {
            return Err(Error::Config(format!("wall probability {} outside [0, 1)", self.wall_probability)));
        }
        if !(2..=GRID).contains(&self.active_region) {
            return Err(Error::Config(format!("active region {} outside 2..={GRID}", self.active_region)));
        }
        if !(1..=GRID).contains(&self.corner_region) {
            return Err(Error::Config(format!("corner region {} outside 1..={GRID}", self.corner_region)));
        }
        if self.dish_channels == 0 {
            return Err(Error::Config("dish needs at least one channel".into()));
        }
        if let Some((k, c)) = self.keys_counts {
            if !(1..=10).contains(&k) || !(1..=10).contains(&c) {
                return Err(Error::Config(format!("keys counts ({k}, {c}) outside 1..=10")));
            }
        }
        let need = match self.env {
            EnvKind::Keys => 1 + self.counts().0 + self.counts().1,
            _ => 2,
        };
        if need > self.active_region * self.active_region {
            return Err(Error::Config(format!("active region {} too small for {need} objects", self.active_region)));
        }
        Ok(())
    }

    /// (keys, chests) for the keys environment.
    pub fn counts(&self) -> (usize, usize) {
        self.keys_counts.unwrap_or(match self.class {
            GenClass::NonDistinguishing => (3, 10),
            GenClass::Distinguishing => (10, 3),
        })
    }
}

fn in_region(p: Pos, size: usize) -> bool {
    (p.row as usize) < size && (p.col as usize) < size
}

fn random_walls(rng: &mut Rng, p: f64, region: usize, keep_clear: Option<Pos>) -> Walls {
    let mut w = Walls::outside_region(region);
    for q in Pos::all() {
        if in_region(q, region) && Some(q) != keep_clear && rng.gen::<f64>() < p {
            w.set(q, true);
        }
    }
    w
}

fn pick(rng: &mut Rng, cells: &[Pos]) -> Option<Pos> {
    cells.choose(rng).copied()
}

/// Free cells within the region, excluding `taken`.
fn free_cells(walls: &Walls, region: usize, taken: &[Pos]) -> Vec<Pos> {
    Pos::all().filter(|&p| in_region(p, region) && !walls.is_wall(p) && !taken.contains(&p)).collect()
}

fn try_generate(spec: &GeneratorSpec, rng: &mut Rng) -> Option<Level> {
    let r = spec.active_region;
    let p = spec.wall_probability;
    match (spec.env, spec.class) {
        (EnvKind::Corner, GenClass::NonDistinguishing) => {
            let walls = random_walls(rng, p, r, Some(Pos::CORNER));
            let spawn = pick(rng, &free_cells(&walls, r, &[Pos::CORNER]))?;
            Some(Level::Corner(CornerLevel { walls, mouse_spawn: spawn, cheese_pos: Pos::CORNER }))
        }
        (EnvKind::Corner, GenClass::Distinguishing) => {
            let walls = random_walls(rng, p, r, None);
            let spawn = pick(rng, &free_cells(&walls, r, &[]))?;
            let cheese = pick(rng, &free_cells(&walls, r.min(spec.corner_region), &[spawn]))?;
            Some(Level::Corner(CornerLevel { walls, mouse_spawn: spawn, cheese_pos: cheese }))
        }
        (EnvKind::Dish, class) => {
            let walls = random_walls(rng, p, r, None);
            let spawn = pick(rng, &free_cells(&walls, r, &[]))?;
            let open = free_cells(&walls, r, &[spawn]);
            let dish = pick(rng, &open)?;
            let cheese = match class {
                GenClass::NonDistinguishing => dish,
                GenClass::Distinguishing => pick(rng, &open)?,
            };
            Some(Level::Dish(DishLevel { walls, mouse_spawn: spawn, cheese_pos: cheese, dish_pos: dish, dish_channels: spec.dish_channels }))
        }
        (EnvKind::Keys, _) => {
            let (k, c) = spec.counts();
            let walls = random_walls(rng, p, r, None);
            let spawn = pick(rng, &free_cells(&walls, r, &[]))?;
            let mut open = free_cells(&walls, r, &[spawn]);
            if open.len() < k + c {
                return None;
            }
            let (chosen, _) = open.partial_shuffle(rng, k + c);
            let keys = chosen[..k].to_vec();
            let chests = chosen[k..].to_vec();
            Some(Level::Keys(KeysLevel { walls, mouse_spawn: spawn, keys, chests }))
        }
    }
}

pub fn generate(spec: &GeneratorSpec, seed: Seed) -> Result<Level> {
    spec.validate()?;
    let mut rng = seed.rng();
    for _ in 0..MAX_ATTEMPTS {
        if let Some(l) = try_generate(spec, &mut rng) {
            debug_assert!(l.validate().is_ok());
            return Ok(l);
        }
    }
    Err(Error::Placement { what: format!("{:?} {:?} level", spec.env, spec.class), attempts: MAX_ATTEMPTS })
}

/// `(1 - alpha) * nd + alpha * d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub alpha: f64,
    pub nd: GeneratorSpec,
    pub d: GeneratorSpec,
}

impl MixtureSpec {
    /// Both generators share every knob except the class.
    pub fn from_base(alpha: f64, base: GeneratorSpec) -> MixtureSpec {
        MixtureSpec {
            alpha,
            nd: GeneratorSpec { class: GenClass::NonDistinguishing, ..base },
            d: GeneratorSpec { class: GenClass::Distinguishing, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        self.nd.validate()?;
        self.d.validate()
    }
}

pub fn sample_mixture(spec: &MixtureSpec, seed: Seed) -> Result<(Level, GenClass)> {
    spec.validate()?;
    let mut rng = seed.split("class").rng();
    let pick_d = rng.gen::<f64>() < spec.alpha;
    let (g, label) = if pick_d { (&spec.d, GenClass::Distinguishing) } else { (&spec.nd, GenClass::NonDistinguishing) };
    Ok((generate(g, seed.split("level"))?, label))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Preserving,
    BiasedTransforming(f64),
    UnrestrictedTransforming,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditVariant {
    Identity,
    Constant,
    Binomial,
    Unrestricted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EditSpec {
    pub variant: EditVariant,
    pub n_edits: usize,
    pub alpha: f64,
    /// Edits only touch cells in this top-left block.
    pub active_region: usize,
}

impl Default for EditSpec {
    fn default() -> Self {
        EditSpec { variant: EditVariant::Identity, n_edits: 12, alpha: 0.0, active_region: GRID }
    }
}

impl EditSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_edits == 0 {
            return Err(Error::Config("n_edits must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("edit alpha {} outside [0, 1]", self.alpha)));
        }
        if !(2..=GRID).contains(&self.active_region) {
            return Err(Error::Config(format!("edit region {} outside 2..={GRID}", self.active_region)));
        }
        Ok(())
    }
}

fn place_err(what: &str) -> Error {
    Error::Placement { what: what.to_string(), attempts: MAX_ATTEMPTS }
}

/// A free cell in the region that holds nothing.
fn open_cell(level: &Level, region: usize, rng: &mut Rng, exclude: &[Pos]) -> Result<Pos> {
    let mut taken = level.occupied();
    taken.extend_from_slice(exclude);
    pick(rng, &free_cells(level.walls(), region, &taken)).ok_or_else(|| place_err("no free cell"))
}

fn preserving(level: &mut Level, region: usize, rng: &mut Rng) -> Result<()> {
    let menu = if level.kind() == EnvKind::Keys { 4 } else { 2 };
    match rng.gen_range(0..menu) {
        0 => {
            let taken = level.occupied();
            let cells: Vec<Pos> = Pos::all().filter(|&p| in_region(p, region) && !taken.contains(&p)).collect();
            let p = pick(rng, &cells).ok_or_else(|| place_err("no cell to toggle"))?;
            level.walls_mut().toggle(p);
        }
        1 => {
            // The spawn may land back where it was.
            let spawn = level.mouse_spawn();
            let mut taken = level.occupied();
            taken.retain(|&p| p != spawn);
            let cells = free_cells(level.walls(), region, &taken);
            let p = pick(rng, &cells).ok_or_else(|| place_err("no cell for spawn"))?;
            level.set_mouse_spawn(p);
        }
        choice => {
            let to = open_cell(level, region, rng, &[])?;
            if let Level::Keys(l) = level {
                let objs = if choice == 2 { &mut l.keys } else { &mut l.chests };
                let i = rng.gen_range(0..objs.len());
                objs[i] = to;
            }
        }
    }
    Ok(())
}

/// Put the cheese in the corner, clearing the wall or moving the spawn out of the way.
fn cheese_to_corner(l: &mut CornerLevel, region: usize, rng: &mut Rng) -> Result<()> {
    l.walls.set(Pos::CORNER, false);
    if l.mouse_spawn == Pos::CORNER {
        let cells = free_cells(&l.walls, region, &[Pos::CORNER]);
        l.mouse_spawn = pick(rng, &cells).ok_or_else(|| place_err("no cell for displaced spawn"))?;
    }
    l.cheese_pos = Pos::CORNER;
    Ok(())
}

fn randomize_cheese(l: &mut CornerLevel, region: usize, rng: &mut Rng) -> Result<()> {
    let cells = free_cells(&l.walls, region, &[l.mouse_spawn]);
    l.cheese_pos = pick(rng, &cells).ok_or_else(|| place_err("no cell for cheese"))?;
    Ok(())
}

fn set_keys_counts(l: &mut KeysLevel, distinguishing: bool, region: usize, rng: &mut Rng) -> Result<()> {
    let (k, c) = if distinguishing { (10, 3) } else { (3, 10) };
    let mut pool: Vec<Pos> = l.keys.iter().chain(&l.chests).copied().collect();
    while pool.len() < k + c {
        let mut taken = pool.clone();
        taken.push(l.mouse_spawn);
        let cells = free_cells(&l.walls, region, &taken);
        pool.push(pick(rng, &cells).ok_or_else(|| place_err("no cell for object"))?);
    }
    pool.shuffle(rng);
    pool.truncate(k + c);
    l.keys = pool[..k].to_vec();
    l.chests = pool[k..].to_vec();
    Ok(())
}

fn transforming(level: &mut Level, alpha: f64, region: usize, rng: &mut Rng) -> Result<()> {
    let d = rng.gen::<f64>() < alpha;
    match level {
        Level::Corner(l) => {
            if d {
                randomize_cheese(l, region, rng)
            } else {
                cheese_to_corner(l, region, rng)
            }
        }
        Level::Dish(l) => {
            let cells = free_cells(&l.walls, region, &[l.mouse_spawn]);
            l.dish_pos = pick(rng, &cells).ok_or_else(|| place_err("no cell for dish"))?;
            l.cheese_pos = if d { pick(rng, &cells).expect("nonempty") } else { l.dish_pos };
            Ok(())
        }
        Level::Keys(l) => set_keys_counts(l, d, region, rng),
    }
}

fn unrestricted(level: &mut Level, region: usize, rng: &mut Rng) -> Result<()> {
    match level {
        Level::Corner(l) => randomize_cheese(l, region, rng),
        Level::Dish(l) => {
            let cells = free_cells(&l.walls, region, &[l.mouse_spawn]);
            l.dish_pos = pick(rng, &cells).ok_or_else(|| place_err("no cell for dish"))?;
            l.cheese_pos = pick(rng, &cells).expect("nonempty");
            Ok(())
        }
        Level::Keys(_) => transforming(level, 0.5, region, rng),
    }
}

fn edit_with(level: &Level, kind: EditKind, region: usize, rng: &mut Rng) -> Result<Level> {
    level.validate()?;
    let mut out = level.clone();
    match kind {
        EditKind::Preserving => preserving(&mut out, region, rng)?,
        EditKind::BiasedTransforming(a) => {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("edit alpha {a} outside [0, 1]")));
            }
            transforming(&mut out, a, region, rng)?
        }
        EditKind::UnrestrictedTransforming => unrestricted(&mut out, region, rng)?,
    }
    debug_assert!(out.validate().is_ok(), "{kind:?} produced an invalid level");
    Ok(out)
}

pub fn elementary_edit(level: &Level, kind: EditKind, seed: Seed) -> Result<Level> {
    edit_with(level, kind, GRID, &mut seed.rng())
}

/// Like [`elementary_edit`] but confined to the top-left `region` block.
pub fn elementary_edit_within(level: &Level, kind: EditKind, region: usize, seed: Seed) -> Result<Level> {
    edit_with(level, kind, region, &mut seed.rng())
}

pub fn apply_edit_sequence(level: &Level, spec: &EditSpec, seed: Seed) -> Result<Level> {
    spec.validate()?;
    let mut rng = seed.rng();
    let n = spec.n_edits;
    let biased = EditKind::BiasedTransforming(spec.alpha);
    let mut cur = level.clone();
    for i in 0..n {
        let last = i + 1 == n;
        let kind = match spec.variant {
            EditVariant::Identity => EditKind::Preserving,
            EditVariant::Constant if last => biased,
            EditVariant::Unrestricted if last => EditKind::UnrestrictedTransforming,
            EditVariant::Constant | EditVariant::Unrestricted => EditKind::Preserving,
            EditVariant::Binomial => {
                if rng.gen::<f64>() < 1.0 / n as f64 {
                    biased
                } else {
                    EditKind::Preserving
                }
            }
        };
        cur = edit_with(&cur, kind, spec.active_region, &mut rng)?;
    }
    Ok(cur)
}
