use super::distances::{bfs_from, INF};
use super::oracle::dish_obstructed;
use crate::env::{Level, Pos};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    NonDistinguishing,
    Distinguishing,
    /// Keys levels whose (k, c) is neither generator's pair.
    Unclassified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub class: Class,
    /// Cheese reachable (corner, dish); some chest reachable (keys).
    pub goal_reachable: bool,
    /// Corner reachable (corner), dish reachable (dish), some key reachable (keys).
    pub proxy_reachable: bool,
}

impl Classification {
    pub fn is_distinguishing(&self) -> bool {
        self.class == Class::Distinguishing
    }
}

pub fn classify(level: &Level) -> Classification {
    match level {
        Level::Corner(l) => {
            let d = bfs_from(&l.walls, l.mouse_spawn);
            let goal = d[l.cheese_pos.index()] < INF;
            let proxy = d[Pos::CORNER.index()] < INF;
            let nd = l.cheese_pos == Pos::CORNER || !goal;
            Classification { class: if nd { Class::NonDistinguishing } else { Class::Distinguishing }, goal_reachable: goal, proxy_reachable: proxy }
        }
        Level::Dish(l) => {
            let goal = bfs_from(&dish_obstructed(l), l.mouse_spawn)[l.cheese_pos.index()] < INF;
            let proxy = bfs_from(&l.walls, l.mouse_spawn)[l.dish_pos.index()] < INF;
            let nd = l.cheese_pos == l.dish_pos || !goal;
            Classification { class: if nd { Class::NonDistinguishing } else { Class::Distinguishing }, goal_reachable: goal, proxy_reachable: proxy }
        }
        Level::Keys(l) => {
            let d = bfs_from(&l.walls, l.mouse_spawn);
            let class = match (l.keys.len(), l.chests.len()) {
                (3, 10) => Class::NonDistinguishing,
                (10, 3) => Class::Distinguishing,
                _ => Class::Unclassified,
            };
            Classification {
                class,
                goal_reachable: l.chests.iter().any(|c| d[c.index()] < INF),
                proxy_reachable: l.keys.iter().any(|k| d[k.index()] < INF),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CornerLevel, DishLevel, KeysLevel, Walls};

    #[test]
    fn corner_rules() {
        let c = |walls, cheese| classify(&Level::Corner(CornerLevel { walls, mouse_spawn: Pos::new(6, 6), cheese_pos: cheese })).class;
        assert_eq!(c(Walls::empty(), Pos::CORNER), Class::NonDistinguishing);
        assert_eq!(c(Walls::empty(), Pos::new(3, 3)), Class::Distinguishing);
        let mut w = Walls::empty();
        for p in [Pos::new(2, 3), Pos::new(4, 3), Pos::new(3, 2), Pos::new(3, 4)] {
            w.set(p, true);
        }
        assert_eq!(c(w, Pos::new(3, 3)), Class::NonDistinguishing);
    }

    #[test]
    fn dish_and_keys_rules() {
        let d = DishLevel { walls: Walls::empty(), mouse_spawn: Pos::new(6, 6), cheese_pos: Pos::new(1, 1), dish_pos: Pos::new(1, 1), dish_channels: 6 };
        assert_eq!(classify(&Level::Dish(d.clone())).class, Class::NonDistinguishing);
        let d = DishLevel { dish_pos: Pos::new(2, 2), ..d };
        assert_eq!(classify(&Level::Dish(d)).class, Class::Distinguishing);
        let k = KeysLevel { walls: Walls::empty(), mouse_spawn: Pos::new(0, 0), keys: vec![Pos::new(1, 1)], chests: vec![Pos::new(2, 2)] };
        assert_eq!(classify(&Level::Keys(k)).class, Class::Unclassified);
    }
}
