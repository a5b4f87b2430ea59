use regret_lab::env::{EnvKind, Level, Pos, Walls};
use regret_lab::levelgen::{generate, GenClass, GeneratorSpec};
use regret_lab::rng::Seed;
use regret_lab::solvers::{
    all_pairs_distances, bfs_from, classify, enumerate_collection_sequences, max_return, Class, Item, Scripted, INF,
};
use regret_lab::umdp::{exact_return, optimal_return, DiscountSpec, RewardSelector, DEFAULT_STATE_CAP};

fn small(env: EnvKind, class: GenClass, region: usize) -> GeneratorSpec {
    GeneratorSpec { active_region: region, ..GeneratorSpec::new(env, class) }
}

#[test]
fn floyd_warshall_matches_bfs_on_random_mazes() {
    let spec = GeneratorSpec::new(EnvKind::Corner, GenClass::Distinguishing);
    for i in 0..200 {
        let l = generate(&spec, Seed(i)).unwrap();
        let w = l.walls();
        let t = all_pairs_distances(w);
        for s in w.free_cells() {
            let b = bfs_from(w, s);
            for q in w.free_cells() {
                assert_eq!(t.get(s, q), b[q.index()], "maze {i}");
            }
        }
    }
}

#[test]
fn corner_and_dish_oracles_match_backward_induction() {
    let d = DiscountSpec::default();
    for env in [EnvKind::Corner, EnvKind::Dish] {
        for class in [GenClass::NonDistinguishing, GenClass::Distinguishing] {
            for i in 0..50 {
                let l = generate(&small(env, class, 7), Seed(i)).unwrap();
                let dp = optimal_return(&l, RewardSelector::True, d, DEFAULT_STATE_CAP).unwrap();
                let or = max_return(&l, d.gamma);
                assert!((dp - or).abs() < 1e-12, "{env:?} {i}: dp {dp} oracle {or}");
                let sp = exact_return(&l, &Scripted::true_goal(), RewardSelector::True, d, DEFAULT_STATE_CAP).unwrap();
                assert!((sp - or).abs() < 1e-12, "{env:?} {i}: scripted {sp} oracle {or}");
            }
        }
    }
}

#[test]
fn keys_oracle_matches_backward_induction() {
    let d = DiscountSpec::default();
    for class in [GenClass::NonDistinguishing, GenClass::Distinguishing] {
        for i in 0..25 {
            let l = generate(&small(EnvKind::Keys, class, 5), Seed(i)).unwrap();
            let dp = optimal_return(&l, RewardSelector::True, d, DEFAULT_STATE_CAP).unwrap();
            let or = max_return(&l, d.gamma);
            assert!((dp - or).abs() < 1e-9, "keys {i}: dp {dp} oracle {or}");
            let sp = exact_return(&l, &Scripted::true_goal(), RewardSelector::True, d, DEFAULT_STATE_CAP).unwrap();
            assert!((sp - or).abs() < 1e-9, "keys {i}: scripted {sp} oracle {or}");
        }
    }
}

/// Direct evaluation of every materialised sequence.
fn brute_keys(l: &regret_lab::env::KeysLevel, gamma: f64) -> f64 {
    let pos = |it: Item| match it {
        Item::Key(i) => l.keys[i as usize],
        Item::Chest(j) => l.chests[j as usize],
    };
    let seqs = enumerate_collection_sequences(l.keys.len(), l.chests.len()).unwrap();
    let mut best = 0.0f64;
    for s in seqs {
        let mut at = l.mouse_spawn;
        let mut steps: u64 = 0;
        let mut ret = 0.0;
        for it in s.items() {
            let d = bfs_from(&l.walls, at)[pos(it).index()];
            steps = if d >= INF || steps >= INF as u64 { INF as u64 } else { steps + d as u64 };
            if steps > 128 {
                steps = INF as u64;
            }
            if let Item::Chest(_) = it {
                if steps < INF as u64 {
                    ret += gamma.powi(steps as i32 - 1);
                }
            }
            at = pos(it);
        }
        best = best.max(ret);
    }
    best
}

#[test]
fn keys_oracle_matches_sequence_enumeration() {
    for class in [GenClass::NonDistinguishing, GenClass::Distinguishing] {
        for i in 0..5 {
            let l = generate(&GeneratorSpec::new(EnvKind::Keys, class), Seed(100 + i)).unwrap();
            let Level::Keys(k) = &l else { unreachable!() };
            let a = max_return(&l, 0.999);
            let b = brute_keys(k, 0.999);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn corner_oracle_monotone_under_wall_removal() {
    let spec = GeneratorSpec::new(EnvKind::Corner, GenClass::Distinguishing);
    for i in 0..1000 {
        let l = generate(&spec, Seed(i)).unwrap();
        let before = max_return(&l, 0.999);
        let walls: Vec<Pos> = regret_lab::env::Pos::all().filter(|&p| l.walls().is_wall(p)).collect();
        if walls.is_empty() {
            continue;
        }
        let mut m = l.clone();
        m.walls_mut().set(walls[i as usize % walls.len()], false);
        assert!(max_return(&m, 0.999) >= before);
    }
}

#[test]
fn nd_generator_output_is_nd() {
    for env in [EnvKind::Corner, EnvKind::Dish] {
        let spec = GeneratorSpec::new(env, GenClass::NonDistinguishing);
        for i in 0..500 {
            assert_eq!(classify(&generate(&spec, Seed(i)).unwrap()).class, Class::NonDistinguishing);
        }
    }
}

#[test]
fn walled_off_cheese() {
    let mut w = Walls::empty();
    for p in [Pos::new(2, 3), Pos::new(4, 3), Pos::new(3, 2), Pos::new(3, 4)] {
        w.set(p, true);
    }
    let l = Level::Corner(regret_lab::env::CornerLevel { walls: w, mouse_spawn: Pos::new(8, 8), cheese_pos: Pos::new(3, 3) });
    assert_eq!(max_return(&l, 0.999), 0.0);
}
