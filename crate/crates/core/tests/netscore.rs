use attonet_core::netscore::{indicator, netscore, MetricConfig, MetricInputs};
use proptest::prelude::*;

fn u(a: f64, p: f64, m: f64) -> f64 {
    netscore(
        &MetricInputs {
            accuracy: a,
            params_millions: p,
            mult_adds_billions: m,
        },
        &MetricConfig::default(),
    )
    .unwrap()
}

#[test]
fn published_rows() {
    let rows = [
        (64.52, 3.26, 0.5675, 69.71),
        (68.68, 2.29, 0.2997, 75.11),
        (65.00, 1.32, 0.1401, 79.85),
        (73.00, 2.97, 0.4248, 73.53),
        (71.10, 1.87, 0.2775, 76.93),
        (69.60, 1.06, 0.1399, 81.99),
        (66.30, 0.32, 0.0575, 90.21),
    ];
    for (a, p, m, expected) in rows {
        let got = u(a, p, m);
        assert!((got - expected).abs() <= 0.05, "{a} {p} {m}: {got} vs {expected}");
    }
}

#[test]
fn counts_convert_to_millions_and_billions() {
    let x = MetricInputs::from_counts(65.0, 1_320_000, 140_100_000);
    assert!((x.params_millions - 1.32).abs() < 1e-12);
    assert!((x.mult_adds_billions - 0.1401).abs() < 1e-12);
}

#[test]
fn indicator_boundary() {
    let cfg = MetricConfig::default();
    assert!(indicator(65.0, &cfg));
    assert!(!indicator(64.99, &cfg));
    assert!(indicator(73.0, &cfg));
}

proptest! {
    #[test]
    fn monotone_in_each_input(
        a in 1.0f64..99.0, p in 0.01f64..100.0, m in 0.001f64..10.0, f in 1.001f64..3.0,
    ) {
        let base = u(a, p, m);
        prop_assert!(u((a * f).min(100.0), p, m) > base);
        prop_assert!(u(a, p * f, m) < base);
        prop_assert!(u(a, p, m * f) < base);
    }

    #[test]
    fn param_scale_identity(a in 1.0f64..100.0, p in 0.01f64..10.0, m in 0.001f64..10.0, k in -2i32..3) {
        let cfg = MetricConfig::default();
        // Each decade of p costs 20·β points, so 10^(k/β) costs 20·k.
        let scaled = p * 10f64.powf(k as f64 / cfg.beta);
        let diff = u(a, p, m) - u(a, scaled, m);
        prop_assert!((diff - 20.0 * k as f64).abs() < 1e-9);
    }

    #[test]
    fn accuracy_only_without_complexity_terms(a in 0.1f64..100.0, p in 0.01f64..10.0, m in 0.001f64..10.0) {
        let cfg = MetricConfig { beta: 0.0, gamma: 0.0, ..Default::default() };
        let x = MetricInputs { accuracy: a, params_millions: p, mult_adds_billions: m };
        let got = netscore(&x, &cfg).unwrap();
        prop_assert!((got - 20.0 * cfg.alpha * a.log10()).abs() < 1e-9);
    }
}
