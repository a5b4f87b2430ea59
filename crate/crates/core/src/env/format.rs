//! Plain-text level files.
//!
//! ```text
//! # format: levels v1
//! env=corner
//! #............
//! ... (13 wall rows)
//! mouse 5 5
//! cheese 0 0
//!
//! env=keys
//! ...
//! ```

use super::{CornerLevel, DishLevel, EnvKind, KeysLevel, Level, Pos, Walls, DEFAULT_DISH_CHANNELS, GRID};
use crate::error::{Error, Result};
use std::fmt::Write as _;

pub const LEVELS_HEADER: &str = "# format: levels v1";

pub fn format_level(level: &Level) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "env={}", level.kind().name());
    for r in 0..GRID {
        for c in 0..GRID {
            s.push(if level.walls().is_wall(Pos::new(r as u8, c as u8)) { '#' } else { '.' });
        }
        s.push('\n');
    }
    let p = |s: &mut String, tag: &str, q: Pos| {
        let _ = writeln!(s, "{tag} {} {}", q.row, q.col);
    };
    p(&mut s, "mouse", level.mouse_spawn());
    match level {
        Level::Corner(l) => p(&mut s, "cheese", l.cheese_pos),
        Level::Dish(l) => {
            p(&mut s, "cheese", l.cheese_pos);
            p(&mut s, "dish", l.dish_pos);
            if l.dish_channels != DEFAULT_DISH_CHANNELS {
                let _ = writeln!(s, "channels {}", l.dish_channels);
            }
        }
        Level::Keys(l) => {
            for &k in &l.keys {
                p(&mut s, "key", k);
            }
            for &c in &l.chests {
                p(&mut s, "chest", c);
            }
        }
    }
    s
}

pub fn format_levels<'a>(levels: impl IntoIterator<Item = &'a Level>) -> String {
    let mut out = String::from(LEVELS_HEADER);
    out.push('\n');
    for (i, l) in levels.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format_level(l));
    }
    out
}

#[derive(Default)]
struct Record {
    start: usize,
    kind: Option<EnvKind>,
    rows: Vec<String>,
    mouse: Option<Pos>,
    cheese: Option<Pos>,
    dish: Option<Pos>,
    channels: Option<u8>,
    keys: Vec<Pos>,
    chests: Vec<Pos>,
}

impl Record {
    fn finish(self) -> Result<Level> {
        let line = self.start;
        let err = |msg: &str| Error::Parse { line, msg: msg.to_string() };
        let kind = self.kind.ok_or_else(|| err("record lacks an env= line"))?;
        if self.rows.len() != GRID {
            return Err(err(&format!("expected {GRID} wall rows, found {}", self.rows.len())));
        }
        let mut walls = Walls::empty();
        for (r, row) in self.rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                if ch == '#' {
                    walls.set(Pos::new(r as u8, c as u8), true);
                }
            }
        }
        let mouse_spawn = self.mouse.ok_or_else(|| err("missing mouse line"))?;
        let level = match kind {
            EnvKind::Corner => Level::Corner(CornerLevel {
                walls,
                mouse_spawn,
                cheese_pos: self.cheese.ok_or_else(|| err("missing cheese line"))?,
            }),
            EnvKind::Dish => Level::Dish(DishLevel {
                walls,
                mouse_spawn,
                cheese_pos: self.cheese.ok_or_else(|| err("missing cheese line"))?,
                dish_pos: self.dish.ok_or_else(|| err("missing dish line"))?,
                dish_channels: self.channels.unwrap_or(DEFAULT_DISH_CHANNELS),
            }),
            EnvKind::Keys => Level::Keys(KeysLevel { walls, mouse_spawn, keys: self.keys, chests: self.chests }),
        };
        level.validate()?;
        Ok(level)
    }
}

fn parse_pos(line: usize, rest: &[&str]) -> Result<Pos> {
    let err = |msg: String| Error::Parse { line, msg };
    if rest.len() != 2 {
        return Err(err(format!("expected two coordinates, got {}", rest.len())));
    }
    let r: u8 = rest[0].parse().map_err(|_| err(format!("bad row `{}`", rest[0])))?;
    let c: u8 = rest[1].parse().map_err(|_| err(format!("bad column `{}`", rest[1])))?;
    let p = Pos::new(r, c);
    if !p.in_bounds() {
        return Err(err(format!("position {p} outside the grid")));
    }
    Ok(p)
}

/// Parse a level file. The version header is mandatory.
pub fn parse_levels(text: &str) -> Result<Vec<Level>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == LEVELS_HEADER => {}
        Some((_, h)) if h.starts_with("# format:") => return Err(Error::Version(h.trim().to_string())),
        _ => return Err(Error::Parse { line: 1, msg: format!("missing `{LEVELS_HEADER}` header") }),
    }
    let mut out = Vec::new();
    let mut cur: Option<Record> = None;
    for (i, raw) in lines {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            if let Some(rec) = cur.take() {
                out.push(rec.finish()?);
            }
            continue;
        }
        if let Some(name) = line.strip_prefix("env=") {
            if let Some(rec) = cur.take() {
                out.push(rec.finish()?);
            }
            let kind = name.parse().map_err(|_| Error::Parse { line: n, msg: format!("unknown env `{name}`") })?;
            cur = Some(Record { start: n, kind: Some(kind), ..Default::default() });
            continue;
        }
        let rec = cur.as_mut().ok_or(Error::Parse { line: n, msg: "content before env= line".into() })?;
        if line.chars().all(|c| c == '#' || c == '.') {
            if line.len() != GRID {
                return Err(Error::Parse { line: n, msg: format!("wall row must have {GRID} cells") });
            }
            rec.rows.push(line.to_string());
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words[0] {
            "mouse" => rec.mouse = Some(parse_pos(n, &words[1..])?),
            "cheese" => rec.cheese = Some(parse_pos(n, &words[1..])?),
            "dish" => rec.dish = Some(parse_pos(n, &words[1..])?),
            "key" => rec.keys.push(parse_pos(n, &words[1..])?),
            "chest" => rec.chests.push(parse_pos(n, &words[1..])?),
            "channels" => {
                let d = words.get(1).and_then(|w| w.parse().ok());
                rec.channels = Some(d.ok_or(Error::Parse { line: n, msg: "bad channel count".into() })?);
            }
            other => return Err(Error::Parse { line: n, msg: format!("unknown directive `{other}`") }),
        }
    }
    if let Some(rec) = cur.take() {
        out.push(rec.finish()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_all_kinds() {
        let mut walls = Walls::empty();
        walls.set(Pos::new(2, 2), true);
        let levels = vec![
            Level::Corner(CornerLevel { walls, mouse_spawn: Pos::new(5, 5), cheese_pos: Pos::CORNER }),
            Level::Dish(DishLevel {
                walls,
                mouse_spawn: Pos::new(1, 1),
                cheese_pos: Pos::new(3, 3),
                dish_pos: Pos::new(3, 3),
                dish_channels: 2,
            }),
            Level::Keys(KeysLevel {
                walls,
                mouse_spawn: Pos::new(0, 0),
                keys: vec![Pos::new(0, 1)],
                chests: vec![Pos::new(4, 4), Pos::new(12, 12)],
            }),
        ];
        let text = format_levels(&levels);
        assert_eq!(parse_levels(&text).unwrap(), levels);
    }

    #[test]
    fn rejects_unknown_version() {
        let err = parse_levels("# format: levels v9\n").unwrap_err();
        assert!(matches!(err, Error::Version(_)));
        assert!(parse_levels("env=corner\n").is_err());
    }

    #[test]
    fn reports_line_numbers() {
        let mut text = format_levels(&[Level::Corner(CornerLevel {
            walls: Walls::empty(),
            mouse_spawn: Pos::new(1, 1),
            cheese_pos: Pos::new(2, 2),
        })]);
        text = text.replace("cheese 2 2", "cheese 2 x");
        match parse_levels(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 17),
            other => panic!("{other:?}"),
        }
    }
}
