use attonet_core::arch::validate;
use attonet_core::complexity::analyze;
use attonet_core::explorer::{
    emit_family, explore, generate, step, AccuracyEvaluator, EvaluationError, ExplorationState, ExplorerError,
    FnEvaluator, Generator, Memoized, MicroParams, StepConfig, SyntheticEvaluator,
};
use attonet_core::netscore::{indicator, MetricConfig};
use attonet_core::zoo::{build_attonet, build_prototype, PrototypeConfig, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn generator(scale: f64) -> Generator {
    Generator::from_network(&build_attonet(Variant::A), scale, 0.5).unwrap()
}

fn reference_run() -> ExplorationState {
    let state = ExplorationState::new(generator(0.2), 7);
    explore(state, &SyntheticEvaluator, &StepConfig::default(), 20, |_| {}).unwrap()
}

#[test]
fn zero_scale_reproduces_base() {
    let g = generator(0.0);
    let base = g.materialize(&g.base, attonet_core::explorer::CANDIDATE_NAME);
    for seed in [0, 1, 99, u64::MAX] {
        assert_eq!(generate(&g, seed), base);
    }
    let mut a = base.clone();
    a.name = build_attonet(Variant::A).name;
    assert_eq!(a, build_attonet(Variant::A));
}

#[test]
fn generation_is_deterministic() {
    let g = generator(0.3);
    for seed in 0..5 {
        assert_eq!(generate(&g, seed), generate(&g, seed));
    }
    assert_ne!(generate(&g, 0), generate(&g, 1));
}

#[test]
fn hundred_seeds_are_valid_and_spread() {
    let g = generator(0.2);
    let params: Vec<u64> = (0..100)
        .map(|seed| {
            let net = generate(&g, seed);
            let report = validate(&net);
            assert!(
                report.is_valid(),
                "seed {seed}: {:?}",
                report.errors().collect::<Vec<_>>()
            );
            analyze(&net).unwrap().total_params
        })
        .collect();
    assert!(params.iter().min() < params.iter().max());
}

#[test]
fn prototype_base_generates_valid_networks() {
    let proto = build_prototype(&PrototypeConfig::default());
    let g = Generator::from_network(&proto, 0.5, 0.5).unwrap();
    for seed in 0..20 {
        assert!(validate(&generate(&g, seed)).is_valid());
    }
}

#[test]
fn micro_params_round_trip_through_network() {
    let net = build_attonet(Variant::B);
    let micro = MicroParams::from_network(&net).unwrap();
    assert_eq!(micro.stage_starts, [1, 4, 8, 14]);
    assert_eq!(
        MicroParams::from_network(&micro.materialize("x", net.input_shape, 51)).unwrap(),
        micro
    );
}

#[test]
fn infeasible_generation_halves_scale_and_keeps_base() {
    let zero = FnEvaluator(|_: &_| Ok(0.0));
    let state = ExplorationState::new(generator(0.2), 1);
    let next = step(&state, &zero, &StepConfig::default()).unwrap();
    assert_eq!(next.current.base, state.current.base);
    assert_eq!(next.current.perturbation_scale, 0.1);
    assert_eq!(next.history.len(), 1);
    assert_eq!(next.history[0].feasible_count, 0);
    assert!(next.best().is_none());
}

#[test]
fn constant_accuracy_tracks_the_cheapest_candidate() {
    let constant = FnEvaluator(|_: &_| Ok(70.0));
    let cfg = StepConfig {
        survivor_fraction: 1.0,
        ..Default::default()
    };
    let mut g = generator(0.2);
    g.complexity_pressure = 0.0;
    let state = ExplorationState::new(g.clone(), 3);
    let next = step(&state, &constant, &cfg).unwrap();
    let best = next.best().unwrap();
    // Regenerate the generation's candidates and take the max-U one.
    let mut seeds = ChaCha8Rng::seed_from_u64(3);
    seeds.set_stream(0);
    let candidates: Vec<_> = (0..16)
        .map(|_| analyze(&generate(&g, seeds.random())).unwrap())
        .collect();
    let u = |p: u64, m: u64| -0.5 * (p as f64).log10() - 0.5 * (m as f64).log10();
    let top = candidates
        .iter()
        .max_by(|a, b| u(a.total_params, a.total_mult_adds).total_cmp(&u(b.total_params, b.total_mult_adds)))
        .unwrap();
    assert_eq!((best.params, best.mult_adds), (top.total_params, top.total_mult_adds));
}

#[test]
fn evaluator_failure_carries_digest() {
    let failing = FnEvaluator(|_: &_| Err(EvaluationError("boom".into())));
    let state = ExplorationState::new(generator(0.2), 1);
    match step(&state, &failing, &StepConfig::default()) {
        Err(ExplorerError::EvaluatorFailure { digest, source }) => {
            assert_eq!(digest.len(), 64);
            assert_eq!(source.0, "boom");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn too_few_seeds_is_rejected() {
    let state = ExplorationState::new(generator(0.2), 1);
    let cfg = StepConfig {
        seeds_per_generation: 1,
        ..Default::default()
    };
    assert!(matches!(
        step(&state, &SyntheticEvaluator, &cfg),
        Err(ExplorerError::InvalidConfig(_))
    ));
}

#[test]
fn reference_run_properties() {
    let state = reference_run();
    assert_eq!(state.history.len(), 20);
    let cfg = MetricConfig::default();
    let mut last = f64::NEG_INFINITY;
    for h in &state.history {
        let best = h.best.as_ref().expect("feasible from the first generation");
        assert!(best.netscore >= last);
        last = best.netscore;
        assert!(indicator(best.accuracy, &cfg));
        assert_eq!(best.accuracy, SyntheticEvaluator::accuracy_for_params(best.params));
    }
    assert_eq!(state.history, reference_run().history);

    let family = emit_family(&state, 4).unwrap();
    let params: Vec<u64> = family.iter().map(|n| analyze(n).unwrap().total_params).collect();
    assert!(params.windows(2).all(|w| w[0] > w[1]), "{params:?}");
    for n in &family {
        assert!(validate(n).is_valid());
    }
}

#[test]
fn family_of_one_is_the_best() {
    let state = reference_run();
    let family = emit_family(&state, 1).unwrap();
    let best = state.best().unwrap();
    assert_eq!(analyze(&family[0]).unwrap().total_params, best.params);
    let available = state.history.iter().filter(|h| h.improved).count();
    assert!(matches!(
        emit_family(&state, available + 1),
        Err(ExplorerError::InsufficientHistory { .. })
    ));
}

#[test]
fn memoization_skips_repeat_evaluations() {
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let counting = FnEvaluator(|net: &_| {
        calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        SyntheticEvaluator.evaluate(net)
    });
    let memo = Memoized::new(counting);
    // Scale 0: every seed is the base network.
    let state = ExplorationState::new(generator(0.0), 1);
    let next = step(&state, &memo, &StepConfig::default()).unwrap();
    step(&next, &memo, &StepConfig::default()).unwrap();
    assert_eq!(calls.load(std::sync::atomic::Ordering::SeqCst), 1);
    assert_eq!(memo.cached(), 1);
}

#[cfg(unix)]
#[test]
fn command_evaluator_contract() {
    use attonet_core::explorer::CommandEvaluator;
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    };
    let ok = write("ok.sh", "#!/bin/sh\ncat > /dev/null\necho 71.5\n");
    let bad = write("bad.sh", "#!/bin/sh\nexit 3\n");
    let junk = write("junk.sh", "#!/bin/sh\necho hello\n");
    let net = build_attonet(Variant::D);
    assert_eq!(CommandEvaluator::new(ok).evaluate(&net).unwrap(), 71.5);
    assert!(CommandEvaluator::new(bad).evaluate(&net).is_err());
    assert!(CommandEvaluator::new(junk).evaluate(&net).is_err());
}
