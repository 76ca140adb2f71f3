//! Regression pins for independently derived reference values: staircase
//! envelope evaluations, the weighted-l1 stress-pair norms, duality-map
//! modulus estimates, and the prox-boundedness bracket. All constants were
//! computed with standalone brute-force/quadrature code before being frozen
//! here; these tests guard the public API against numerical drift.

use std::collections::BTreeMap;

use varcert_core::envelope::{moreau_envelope, prox_bound_threshold};
use varcert_core::models::gallery::gallery_lookup;
use varcert_core::models::FunctionModel;
use varcert_core::norm_space::{estimate_strong_mono_modulus, NormEval, NormModel};
use varcert_core::plan::SamplePlan;

fn gallery(name: &str) -> FunctionModel {
    gallery_lookup(name, &BTreeMap::new()).expect("bundled model exists")
}

fn gallery_with(name: &str, key: &str, value: f64) -> FunctionModel {
    let mut params = BTreeMap::new();
    params.insert(key.to_string(), value);
    gallery_lookup(name, &params).expect("bundled model exists")
}

#[test]
fn staircase_envelope_reference_values() {
    // (lambda, x, envelope value, unique proximal point), each argmin
    // confirmed against a dense brute-force scan of the tilted objective.
    let cases = [
        (0.10, 0.30, 0.25, 0.20),
        (1.00, 0.80, 0.32, 0.00),
        (0.25, 0.50, 0.375, 0.25),
        (0.05, 0.21, 0.18544444444444444, 1.0 / 6.0),
    ];
    let phi = gallery("staircase");
    let m = NormModel::euclidean(1);
    // Piece widths shrink like 1/k^2, so the coarse grid must resolve the
    // ~3e-3-wide flat next to the 1/6 kink for the lambda = 0.05 case.
    let plan = SamplePlan::line(17, 1025, -1.0, 1.0).expect("valid plan");
    for &(lambda, x, value, prox) in &cases {
        let r = moreau_envelope(&phi, lambda, &[x], &m, &plan).expect("envelope computes");
        // All four proximal points are kinks, where one-sided refinement
        // converges in x to the 1e-8 step floor; values are good to ~5e-8.
        assert!(
            (r.value - value).abs() <= 5e-8,
            "e_{lambda}({x}) = {} but expected {value}",
            r.value
        );
        assert!(
            r.is_single_valued(),
            "prox at lambda={lambda}, x={x} should be a single point"
        );
        assert!(
            (r.minimizers[0][0] - prox).abs() <= 1e-6,
            "prox at lambda={lambda}, x={x} is {} but expected {prox}",
            r.minimizers[0][0]
        );
    }
}

#[test]
fn weighted_l1_stress_pair_norms() {
    // Midpoint-quadrature values of the three integral norms behind the
    // shifted-convexity counterexample on the 512-point grid.
    let phi = gallery_with("l1_weighted_square", "m", 512.0);
    let (u, v) = phi.meta.stress_pairs.first().expect("stress pair bundled");
    let ne = NormEval::weighted_l1(vec![1.0 / 512.0; 512]).expect("valid weights");
    let mid: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
    let cases = [
        (u.as_slice(), 0.68157933041963048, "first profile"),
        (v.as_slice(), 0.261623965918683643, "second profile"),
        (mid.as_slice(), 0.362091942164957548, "midpoint"),
    ];
    for (w, expected, label) in cases {
        let got = ne.norm(w).expect("norm computes");
        assert!(
            (got - expected).abs() <= 1e-12,
            "{label}: norm {got} but expected {expected}"
        );
    }
}

#[test]
fn duality_map_modulus_estimates() {
    // Empirical min of <J(x)-J(y), x-y> / ||x-y||^2 over the default pair
    // budget on [-1, 1]^2. In the Hilbert case the ratio is identically 1;
    // the non-Hilbert values are frozen from the first run of this sampler.
    let plan = SamplePlan::new(7, 33, 32, vec![-1.0, -1.0], vec![1.0, 1.0]).expect("valid plan");
    let cases = [(1.5, 0.5001301067021684), (2.0, 1.0), (4.0, 0.0039062201980186685)];
    for &(p, expected) in &cases {
        let m = NormModel::lp(p, 2).expect("valid norm");
        let est = estimate_strong_mono_modulus(&m, &plan).expect("estimate computes");
        assert_eq!(est.pairs_tested, 100_000, "pair budget saturates the cap");
        assert!(
            (est.value - expected).abs() <= 1e-12,
            "p={p}: modulus {} but expected {expected}",
            est.value
        );
    }
}

#[test]
fn prox_bound_threshold_brackets_the_analytic_value() {
    // For the concave quadratic -(1/4) x^2 the tilted objective stays
    // coercive exactly for lambda < 2.
    let phi = gallery_with("quadratic", "alpha", -0.5);
    let m = NormModel::euclidean(1);
    let plan = SamplePlan::line(7, 33, -4.0, 4.0).expect("valid plan");
    let grid = [0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 12.8];
    let th = prox_bound_threshold(&phi, &m, &plan, &grid).expect("threshold computes");
    assert!(th.bracket_valid);
    assert_eq!(th.lambda0_lower, Some(1.6));
    assert_eq!(th.lambda0_upper, Some(3.2));
    let finite_count = th.tested.iter().filter(|(_, finite)| *finite).count();
    assert_eq!(finite_count, 6, "six grid lambdas below the threshold stay finite");
}
