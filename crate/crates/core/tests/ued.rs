use proptest::prelude::*;
use regret_lab::env::{EnvKind, Level};
use regret_lab::learners::{Frozen, Learner};
use regret_lab::levelgen::{apply_edit_sequence, generate, EditSpec, EditVariant, GenClass, GeneratorSpec, MixtureSpec};
use regret_lab::rng::Seed;
use regret_lab::solvers::{classify, Scripted};
use regret_lab::ued::*;
use regret_lab::umdp::DiscountSpec;

fn mixture(alpha: f64) -> MixtureSpec {
    MixtureSpec::from_base(alpha, GeneratorSpec { active_region: 5, ..GeneratorSpec::new(EnvKind::Corner, GenClass::NonDistinguishing) })
}

fn adversary(method: Method, batch: usize, capacity: usize) -> AdversaryConfig {
    AdversaryConfig { method, batch_size: batch, capacity, rollout_steps: 1, ..Default::default() }
}

fn run(method: Method, alpha: f64, steps: u64, seed: Seed) -> (UedState, Vec<StepReport>, Frozen) {
    let cfg = adversary(method, 8, 32);
    let mut state = UedState::new(&cfg, DiscountSpec::default()).unwrap();
    let mut learner = Frozen::new(Scripted::proxy_goal());
    let m = mixture(alpha);
    let reports = (0..steps).map(|i| step(&mut state, &mut learner, &m, &cfg, seed.index(i)).unwrap()).collect();
    (state, reports, learner)
}

#[test]
fn plr_updates_only_on_replay() {
    for method in [Method::Plr, Method::Accel, Method::MaximinPlr] {
        let (state, reports, learner) = run(method, 0.3, 60, Seed(1));
        let replays = reports.iter().filter(|r| r.cycle == Cycle::Replay).count() as u64;
        for r in &reports {
            assert_eq!(r.update.is_some(), r.cycle == Cycle::Replay, "{method:?}");
            assert_eq!(r.trained_levels > 0, r.cycle == Cycle::Replay);
        }
        assert_eq!(learner.update_count(), replays);
        assert_eq!(state.replay_cycles, replays);
        assert_eq!(state.generate_cycles + state.replay_cycles, 60);
        assert!(state.buffer.len() <= state.buffer.capacity());
    }
}

#[test]
fn replay_rate_matches_configuration() {
    for (method, rate) in [(Method::Plr, 0.33), (Method::AccelBin, 0.5)] {
        let (state, _, _) = run(method, 0.2, 600, Seed(2));
        // The buffer fills after one generate cycle, so nearly every step draws the coin.
        let frac = state.replay_cycles as f64 / 600.0;
        assert!((frac - rate).abs() < 0.06, "{method:?}: {frac}");
    }
}

#[test]
fn dr_trains_on_every_batch_at_mixture_rate() {
    let alpha = 0.25;
    let (state, reports, learner) = run(Method::Dr, alpha, 150, Seed(3));
    assert!(reports.iter().all(|r| r.cycle == Cycle::Random && r.update.is_some()));
    assert_eq!(learner.update_count(), 150);
    assert!(state.buffer.is_empty());
    assert_eq!(state.trained_levels, 150 * 8);
    let f = state.replay_fraction_distinguishing();
    let se = (alpha * (1.0 - alpha) / 1200.0_f64).sqrt();
    assert!((f - alpha).abs() < 4.0 * se, "{f}");
}

#[test]
fn runs_are_deterministic_in_seed() {
    let fingerprint = |s: &UedState| {
        s.buffer.entries().iter().map(|e| (e.level.id(), e.score.to_bits(), e.last_touched)).collect::<Vec<_>>()
    };
    let (a, ra, _) = run(Method::AccelUnr, 0.1, 40, Seed(7));
    let (b, rb, _) = run(Method::AccelUnr, 0.1, 40, Seed(7));
    let (c, _, _) = run(Method::AccelUnr, 0.1, 40, Seed(8));
    assert_eq!(fingerprint(&a), fingerprint(&b));
    assert_eq!(a.env_steps, b.env_steps);
    assert_eq!(ra, rb);
    assert_ne!(fingerprint(&a), fingerprint(&c));
}

#[test]
fn identity_edits_never_move_the_goal() {
    for class in [GenClass::NonDistinguishing, GenClass::Distinguishing] {
        let g = GeneratorSpec::new(EnvKind::Corner, class);
        let spec = EditSpec { variant: EditVariant::Identity, n_edits: 12, alpha: 0.0, active_region: 13 };
        for i in 0..200 {
            let l = generate(&g, Seed(11).index(i)).unwrap();
            let e = apply_edit_sequence(&l, &spec, Seed(12).index(i)).unwrap();
            let (a, b) = (classify(&l), classify(&e));
            // Wall toggles can cut the cheese off, which reads as non-distinguishing.
            assert!(a.class == b.class || !b.goal_reachable || !a.goal_reachable, "{i}");
            if let (Level::Corner(x), Level::Corner(y)) = (&l, &e) {
                assert_eq!(x.cheese_pos, y.cheese_pos);
            }
        }
    }
}

fn scored_level(i: u64) -> Level {
    generate(&GeneratorSpec { active_region: 6, ..GeneratorSpec::new(EnvKind::Corner, GenClass::NonDistinguishing) }, Seed(i)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn buffer_invariants(
        capacity in 1usize..12,
        ops in prop::collection::vec((0u64..30, 0.0f64..1.0), 1..60),
        temperature in 0.05f64..2.0,
        staleness in 0.0f64..=1.0,
    ) {
        let mut buf = LevelBuffer::new(capacity).unwrap();
        for (t, (id, score)) in ops.into_iter().enumerate() {
            let full = buf.len() == capacity;
            let min_before = buf.entries().iter().map(|e| e.score).fold(f64::INFINITY, f64::min);
            let mut e = BufferEntry::new(scored_level(id), t as u64);
            e.score = score;
            let present = buf.position(e.level.id()).is_some();
            let out = buf.insert_if_better(e);
            buf.iteration += 1;
            prop_assert!(buf.len() <= capacity);
            match out {
                InsertOutcome::Refreshed => prop_assert!(present),
                InsertOutcome::Inserted => prop_assert!(!full),
                InsertOutcome::Evicted(_) => prop_assert!(full && score > min_before),
                InsertOutcome::Rejected => prop_assert!(full && score <= min_before),
            }
            let mut ids: Vec<u64> = buf.entries().iter().map(|e| e.level.id()).collect();
            ids.sort_unstable();
            ids.dedup();
            prop_assert_eq!(ids.len(), buf.len());
            let p = buf.replay_distribution(temperature, staleness).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
        }
    }
}
