//! Descriptor in, certificate, bounds out, across modules.

use pconvex::convexity::certify_i;
use pconvex::hermite_hadamard::fractional_mid_by_density;
use pconvex::{
    hh_bounds, jensen_lower, jensen_upper, mgf_lower, mgf_upper, taylor_hh, BoundOptions,
    CertifyConfig, DensityFamily, FunctionSpec, RandomVariable,
};
use proptest::prelude::*;

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + inner + f(b)) * h / 3.0
}

#[test]
fn descriptor_to_sandwich_under_a_density() {
    let text = r#"{"family":"exp-taylor-remainder","params":{"p":2},"domain":[0,3]}"#;
    let f: FunctionSpec = serde_json::from_str(text).unwrap();
    let cert = certify_i(&f, 2, 0.0, 3.0, &CertifyConfig::default());
    assert!(cert.passed());
    let x = RandomVariable::density(
        DensityFamily::BetaLike {
            alpha: 2.0,
            beta: 3.0,
        },
        0.0,
        3.0,
    )
    .unwrap();
    let opts = BoundOptions::default();
    let lo = jensen_lower(&f, &cert, &x, &opts).unwrap();
    let up = jensen_upper(&f, &cert, &x, &opts).unwrap();
    // beta(2,3) on [0,3]: density 12 (t/3)(1 - t/3)^2 / 3
    let pdf = |t: f64| 4.0 * (t / 3.0) * (1.0 - t / 3.0).powi(2);
    let oracle = simpson(|t| pdf(t) * f.eval(t), 0.0, 3.0, 20_000);
    assert!((lo.oracle.unwrap() - oracle).abs() < 1e-9);
    assert!(lo.value <= oracle && oracle <= up.value);
    assert!(lo.value >= lo.classical && up.value <= up.classical);
}

#[test]
fn hh_for_taylor_remainders_matches_the_closed_form() {
    for p in 1..=4u32 {
        let b = 1.7;
        let f = FunctionSpec::exp_taylor_remainder(p - 1)
            .with_domain(0.0, b)
            .unwrap();
        let cert = certify_i(&f, p - 1, 0.0, b, &CertifyConfig::default());
        let r = hh_bounds(&f, &cert, p).unwrap();
        let (l, m, u) = taylor_hh(p, b).unwrap();
        assert!(
            (r.lower - l).abs() < 1e-13 && (r.mid - m).abs() < 1e-12 && (r.upper - u).abs() < 1e-13,
            "p={p}"
        );
    }
}

#[test]
fn fractional_density_mid_matches_direct_quadrature() {
    let f = FunctionSpec::shifted_power(3.0, 0.0).unwrap();
    let (a, b, alpha) = (0.0, 1.0, 2.0);
    // density α/(2(b-a)^α) ((x-a)^{α-1} + (b-x)^{α-1})
    let direct = simpson(
        |t| alpha / 2.0 * ((t - a) + (b - t)) * f.eval(t),
        a,
        b,
        2_000,
    );
    let got = fractional_mid_by_density(&f, a, b, alpha).unwrap();
    assert!((got - direct).abs() < 1e-12, "{got} vs {direct}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mgf_bounds_sandwich_uniform_laws(hi in 0.1f64..3.0, s in 0.0f64..2.5, p in 1u32..5) {
        let x = RandomVariable::uniform(0.0, hi).unwrap();
        let exact = if s == 0.0 { 1.0 } else { ((s * hi).exp() - 1.0) / (s * hi) };
        let lo = mgf_lower(&x, s, p).unwrap().lower;
        let up = mgf_upper(&x, s, p).unwrap().upper.unwrap();
        let tol = 1e-9 * exact;
        prop_assert!(lo <= exact + tol, "{lo} > {exact}");
        prop_assert!(exact <= up + tol, "{exact} > {up}");
    }

    #[test]
    fn descriptors_round_trip(q in 1.0f64..8.0, a in -3.0f64..3.0, w in 0.1f64..4.0, s in 0.1f64..2.0) {
        let f = FunctionSpec::shifted_power(q, a).unwrap().with_domain(a, a + w).unwrap();
        let g = FunctionSpec::exp_taylor_remainder(2).precompose_affine(s, -s * a).unwrap();
        let h = FunctionSpec::weighted_sum(&[(0.5, &f), (1.5, &g)]).unwrap();
        for spec in [f, g, h] {
            let back: FunctionSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
