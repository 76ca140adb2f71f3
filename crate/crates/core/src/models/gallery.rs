//! The model gallery: named example functions with analytic
//! subdifferentials, graph patches, and certified metadata.
//!
//! Exactness matters here. The certifiers rely on interval endpoints and
//! stratum geometry being exact, so every subdifferential below is written
//! from a case analysis rather than finite differences.

use super::{FunctionModel, ModelMeta, ProxBound, SubdiffSet};
use crate::error::{Error, Result};
use crate::second_order::{AccumStratum, GraphPatch};
use std::collections::BTreeMap;
use std::sync::Arc;

pub fn gallery_names() -> &'static [&'static str] {
    &["staircase", "zero_one", "l1_weighted_square", "abs", "quadratic", "huber_source"]
}

/// Look up a gallery model by name with optional numeric parameters.
pub fn gallery_lookup(name: &str, params: &BTreeMap<String, f64>) -> Result<FunctionModel> {
    let allow = |keys: &[&str]| -> Result<()> {
        for k in params.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::input(format!(
                    "unknown parameter '{k}' for gallery model '{name}'"
                )));
            }
        }
        Ok(())
    };
    match name {
        "staircase" => {
            allow(&[])?;
            Ok(staircase())
        }
        "zero_one" => {
            allow(&[])?;
            Ok(zero_one())
        }
        "abs" => {
            allow(&[])?;
            Ok(abs_model())
        }
        "quadratic" => {
            allow(&["alpha", "n"])?;
            let alpha = params.get("alpha").copied().unwrap_or(1.0);
            let n = params.get("n").copied().unwrap_or(1.0);
            if n < 1.0 || n.fract() != 0.0 {
                return Err(Error::input("quadratic parameter n must be a positive integer"));
            }
            Ok(quadratic(alpha, n as usize))
        }
        "huber_source" => {
            allow(&["delta"])?;
            let delta = params.get("delta").copied().unwrap_or(1.0);
            if !(delta > 0.0) {
                return Err(Error::input("huber_source parameter delta must be positive"));
            }
            Ok(huber_source(delta))
        }
        "l1_weighted_square" => {
            allow(&["m"])?;
            let m = params.get("m").copied().unwrap_or(512.0);
            if m < 2.0 || m.fract() != 0.0 {
                return Err(Error::input("l1_weighted_square parameter m must be an integer >= 2"));
            }
            Ok(l1_weighted_square(m as usize))
        }
        _ => Err(Error::input(format!("unknown gallery model '{name}'"))),
    }
}

// ---------------------------------------------------------------------------
// staircase: piecewise-linear steps on [-1, 1], tilt-stable at 0 but not
// prox-regular there. On 1/(k+1) <= |x| <= 1/k the value is
// min((k+1)/k * |x| - 1/(k(k+1)), 1/k); phi(0) = 0; +inf outside [-1, 1].
// ---------------------------------------------------------------------------

/// Slope of the k-th ramp.
pub fn staircase_slope(k: f64) -> f64 {
    (k + 1.0) / k
}

/// Ramp-to-flat junction inside piece k.
pub fn staircase_junction(k: f64) -> f64 {
    (k + 2.0) / ((k + 1.0) * (k + 1.0))
}

/// Midpoint of the flat part of piece k.
pub fn staircase_flat_mid(k: f64) -> f64 {
    0.5 * (staircase_junction(k) + 1.0 / k)
}

/// Strata of |x| > 0; callers handle x = 0 before classifying.
#[derive(Debug, Clone, Copy, PartialEq)]
enum StairPoint {
    /// x = 1/m for m >= 2: the kink carrying the vertical segment
    /// [0, m/(m-1)].
    Kink { m: f64 },
    /// x = 1: right edge of the domain; subdifferential [0, +inf).
    DomainEdge,
    Slope { k: f64 },
    Junction { k: f64 },
    Flat { k: f64 },
    Outside,
}

/// Classify |x| into the staircase strata. Reliable for |x| down to about
/// 1e-5 (piece widths shrink like 1/k^2 and the matching tolerances are
/// absolute 1e-12 / relative 1e-9).
fn stair_classify(ax: f64) -> StairPoint {
    debug_assert!(ax > 0.0);
    if ax > 1.0 + 1e-12 {
        return StairPoint::Outside;
    }
    if (ax - 1.0).abs() <= 1e-12 {
        return StairPoint::DomainEdge;
    }
    let inv = 1.0 / ax;
    let m = inv.round();
    if m >= 2.0 && (inv - m).abs() <= 1e-9 {
        return StairPoint::Kink { m };
    }
    let k = inv.floor();
    let xc = staircase_junction(k);
    if (ax - xc).abs() <= 1e-12 {
        return StairPoint::Junction { k };
    }
    if ax < xc {
        StairPoint::Slope { k }
    } else {
        StairPoint::Flat { k }
    }
}

fn stair_eval(x: f64) -> f64 {
    let ax = x.abs();
    if ax == 0.0 {
        return 0.0;
    }
    if ax > 1.0 {
        return f64::INFINITY;
    }
    let k = (1.0 / ax).floor().max(1.0);
    let ramp = staircase_slope(k) * ax - 1.0 / (k * (k + 1.0));
    ramp.min(1.0 / k)
}

fn neg_set(s: SubdiffSet) -> SubdiffSet {
    match s {
        SubdiffSet::Empty => SubdiffSet::Empty,
        SubdiffSet::Point(p) => SubdiffSet::Point(p.into_iter().map(|v| -v).collect()),
        SubdiffSet::Points(ps) => {
            SubdiffSet::Points(ps.into_iter().map(|p| p.into_iter().map(|v| -v).collect()).collect())
        }
        SubdiffSet::Intervals(iv) => {
            SubdiffSet::Intervals(iv.into_iter().map(|(lo, hi)| (-hi, -lo)).collect())
        }
        SubdiffSet::Hull(g) => {
            SubdiffSet::Hull(g.into_iter().map(|p| p.into_iter().map(|v| -v).collect()).collect())
        }
    }
}

fn stair_subdiff(x: f64) -> SubdiffSet {
    if x == 0.0 {
        return SubdiffSet::interval(-1.0, 1.0);
    }
    let s = match stair_classify(x.abs()) {
        StairPoint::Outside => SubdiffSet::Empty,
        StairPoint::DomainEdge => SubdiffSet::interval(0.0, f64::INFINITY),
        StairPoint::Kink { m } => SubdiffSet::interval(0.0, m / (m - 1.0)),
        StairPoint::Slope { k } => SubdiffSet::Point(vec![staircase_slope(k)]),
        StairPoint::Junction { k } => {
            SubdiffSet::Points(vec![vec![0.0], vec![staircase_slope(k)]])
        }
        StairPoint::Flat { .. } => SubdiffSet::Point(vec![0.0]),
    };
    if x > 0.0 {
        s
    } else {
        neg_set(s)
    }
}

fn mirror_rays(rays: &[[f64; 2]]) -> Vec<[f64; 2]> {
    rays.iter().map(|r| [-r[0], -r[1]]).collect()
}

fn mirror_patch(p: GraphPatch) -> GraphPatch {
    match p {
        GraphPatch::Curve { point_rays, accumulating } => GraphPatch::Curve {
            point_rays: mirror_rays(&point_rays),
            accumulating: accumulating
                .into_iter()
                .map(|s| AccumStratum::new(format!("{}~mirror", s.label), mirror_rays(&s.rays)))
                .collect(),
        },
        GraphPatch::SmoothHessian(h) => GraphPatch::SmoothHessian(h),
    }
}

const HORIZ: [[f64; 2]; 2] = [[1.0, 0.0], [-1.0, 0.0]];
const VERT: [[f64; 2]; 2] = [[0.0, 1.0], [0.0, -1.0]];

fn curve(point_rays: Vec<[f64; 2]>, accumulating: Vec<AccumStratum>) -> GraphPatch {
    GraphPatch::Curve { point_rays, accumulating }
}

/// Strata families accumulating at (0, 0): both signs of ramps, flats,
/// verticals, corners, and junction points march into the origin.
fn stair_origin_accum() -> Vec<AccumStratum> {
    let right: Vec<AccumStratum> = vec![
        AccumStratum::new("flat_interior", HORIZ.to_vec()),
        AccumStratum::new("slope_interior", HORIZ.to_vec()),
        AccumStratum::new("vertical_interior", VERT.to_vec()),
        AccumStratum::new("bottom_corner", vec![[0.0, 1.0], [-1.0, 0.0]]),
        AccumStratum::new("junction_low", vec![[1.0, 0.0]]),
    ];
    let mut out = right.clone();
    for s in right {
        out.push(AccumStratum::new(format!("{}~mirror", s.label), mirror_rays(&s.rays)));
    }
    out
}

fn stair_patch(x: f64, xstar: f64) -> Option<GraphPatch> {
    let tp = 1e-9;
    if x == 0.0 {
        // central vertical segment {0} x [-1, 1]
        if xstar.abs() <= tp {
            return Some(curve(VERT.to_vec(), stair_origin_accum()));
        }
        if (xstar - 1.0).abs() <= tp {
            return Some(curve(
                vec![[0.0, -1.0]],
                vec![
                    AccumStratum::new("slope_interior", HORIZ.to_vec()),
                    AccumStratum::new("vertical_interior", VERT.to_vec()),
                    AccumStratum::new("top_corner", vec![[0.0, -1.0], [1.0, 0.0]]),
                    AccumStratum::new("junction_high", vec![[-1.0, 0.0]]),
                ],
            ));
        }
        if (xstar + 1.0).abs() <= tp {
            return Some(mirror_patch(stair_patch(0.0, 1.0)?));
        }
        if xstar.abs() < 1.0 {
            // interior height: only the kink verticals accumulate here
            return Some(curve(
                VERT.to_vec(),
                vec![AccumStratum::new("vertical_interior", VERT.to_vec())],
            ));
        }
        return None;
    }
    if x < 0.0 {
        return stair_patch(-x, -xstar).map(mirror_patch);
    }
    match stair_classify(x) {
        StairPoint::Outside => None,
        StairPoint::Slope { k } => {
            ((xstar - staircase_slope(k)).abs() <= tp).then(|| curve(HORIZ.to_vec(), vec![]))
        }
        StairPoint::Flat { .. } => (xstar.abs() <= tp).then(|| curve(HORIZ.to_vec(), vec![])),
        StairPoint::Junction { k } => {
            if xstar.abs() <= tp {
                Some(curve(vec![[1.0, 0.0]], vec![]))
            } else if (xstar - staircase_slope(k)).abs() <= tp {
                Some(curve(vec![[-1.0, 0.0]], vec![]))
            } else {
                None
            }
        }
        StairPoint::Kink { m } => {
            let top = m / (m - 1.0);
            if xstar.abs() <= tp {
                Some(curve(vec![[0.0, 1.0], [-1.0, 0.0]], vec![]))
            } else if (xstar - top).abs() <= tp {
                Some(curve(vec![[0.0, -1.0], [1.0, 0.0]], vec![]))
            } else if xstar > 0.0 && xstar < top {
                Some(curve(VERT.to_vec(), vec![]))
            } else {
                None
            }
        }
        StairPoint::DomainEdge => {
            if xstar.abs() <= tp {
                Some(curve(vec![[0.0, 1.0], [-1.0, 0.0]], vec![]))
            } else if xstar > 0.0 {
                Some(curve(VERT.to_vec(), vec![]))
            } else {
                None
            }
        }
    }
}

pub fn staircase() -> FunctionModel {
    FunctionModel::new("staircase", 1, Arc::new(|x: &[f64]| stair_eval(x[0])))
        .with_subdiff(Arc::new(|x: &[f64]| stair_subdiff(x[0])))
        .with_patch(Arc::new(|x: &[f64], xs: &[f64]| stair_patch(x[0], xs[0])))
        .with_meta(ModelMeta {
            is_convex: false,
            prox_regular: None,
            prox_bounded: Some(ProxBound { alpha: 0.0, beta: 0.0, anchor: vec![0.0] }),
            subdiff_continuous: true,
            quadratic_alpha: None,
            stress_pairs: vec![],
        })
}

// ---------------------------------------------------------------------------
// zero_one: phi(0) = 0, phi(x) = 1 otherwise. Prox-regular at (0,0) but not
// subdifferentially continuous there; the subdifferential graph is the
// vertical line {0} x R plus the horizontal branches at height 0.
// ---------------------------------------------------------------------------

pub fn zero_one() -> FunctionModel {
    FunctionModel::new(
        "zero_one",
        1,
        Arc::new(|x: &[f64]| if x[0] == 0.0 { 0.0 } else { 1.0 }),
    )
    .with_subdiff(Arc::new(|x: &[f64]| {
        if x[0] == 0.0 {
            SubdiffSet::interval(f64::NEG_INFINITY, f64::INFINITY)
        } else {
            SubdiffSet::Point(vec![0.0])
        }
    }))
    .with_patch(Arc::new(|x: &[f64], xs: &[f64]| {
        let tp = 1e-9;
        if x[0] == 0.0 {
            let accumulating = if xs[0].abs() <= tp {
                vec![
                    AccumStratum::new("right_branch", HORIZ.to_vec()),
                    AccumStratum::new("left_branch", HORIZ.to_vec()),
                ]
            } else {
                vec![]
            };
            Some(curve(VERT.to_vec(), accumulating))
        } else if xs[0].abs() <= tp {
            Some(curve(HORIZ.to_vec(), vec![]))
        } else {
            None
        }
    }))
    .with_meta(ModelMeta {
        is_convex: false,
        prox_regular: Some((0.0, 0.5)),
        prox_bounded: Some(ProxBound { alpha: 0.0, beta: 0.0, anchor: vec![0.0] }),
        subdiff_continuous: false,
        quadratic_alpha: None,
        stress_pairs: vec![],
    })
}

// ---------------------------------------------------------------------------
// abs: phi(x) = |x| with the soft-threshold proximal oracle.
// ---------------------------------------------------------------------------

pub fn abs_model() -> FunctionModel {
    FunctionModel::new("abs", 1, Arc::new(|x: &[f64]| x[0].abs()))
        .with_subdiff(Arc::new(|x: &[f64]| {
            if x[0] == 0.0 {
                SubdiffSet::interval(-1.0, 1.0)
            } else {
                SubdiffSet::Point(vec![x[0].signum()])
            }
        }))
        .with_prox_oracle(Arc::new(|lambda: f64, x: &[f64]| {
            vec![x[0].signum() * (x[0].abs() - lambda).max(0.0)]
        }))
        .with_patch(Arc::new(|x: &[f64], xs: &[f64]| {
            let tp = 1e-9;
            if x[0] == 0.0 {
                if (xs[0] - 1.0).abs() <= tp {
                    Some(curve(vec![[0.0, -1.0], [1.0, 0.0]], vec![]))
                } else if (xs[0] + 1.0).abs() <= tp {
                    Some(curve(vec![[0.0, 1.0], [-1.0, 0.0]], vec![]))
                } else if xs[0].abs() < 1.0 {
                    Some(curve(VERT.to_vec(), vec![]))
                } else {
                    None
                }
            } else if (xs[0] - x[0].signum()).abs() <= tp {
                Some(curve(HORIZ.to_vec(), vec![]))
            } else {
                None
            }
        }))
        .with_meta(ModelMeta {
            is_convex: true,
            prox_regular: Some((0.0, 1.0)),
            prox_bounded: Some(ProxBound { alpha: 0.0, beta: 0.0, anchor: vec![0.0] }),
            subdiff_continuous: true,
            quadratic_alpha: None,
            stress_pairs: vec![],
        })
}

// ---------------------------------------------------------------------------
// quadratic: phi(x) = (alpha/2) ||x||_2^2 in n dimensions. Negative alpha
// gives the standard prox-boundedness counterexamples.
// ---------------------------------------------------------------------------

pub fn quadratic(alpha: f64, n: usize) -> FunctionModel {
    let eval = Arc::new(move |x: &[f64]| 0.5 * alpha * x.iter().map(|v| v * v).sum::<f64>());
    let mut meta = ModelMeta {
        is_convex: alpha >= 0.0,
        prox_regular: if alpha >= 0.0 { Some((0.0, 1.0)) } else { None },
        prox_bounded: Some(ProxBound {
            alpha: (alpha / 2.0).min(0.0),
            beta: 0.0,
            anchor: vec![0.0; n],
        }),
        subdiff_continuous: true,
        quadratic_alpha: Some(alpha),
        stress_pairs: vec![],
    };
    if alpha < 0.0 {
        meta.prox_regular = None;
    }
    let model = FunctionModel::new(format!("quadratic(alpha={alpha},n={n})"), n, eval)
        .with_subdiff(Arc::new(move |x: &[f64]| {
            SubdiffSet::Point(x.iter().map(|v| alpha * v).collect())
        }))
        .with_patch(Arc::new(move |x: &[f64], _: &[f64]| {
            let n = x.len();
            let mut h = vec![vec![0.0; n]; n];
            for (i, row) in h.iter_mut().enumerate() {
                row[i] = alpha;
            }
            Some(GraphPatch::SmoothHessian(h))
        }))
        .with_hessian(Arc::new(move |x: &[f64]| {
            let n = x.len();
            let mut h = vec![vec![0.0; n]; n];
            for (i, row) in h.iter_mut().enumerate() {
                row[i] = alpha;
            }
            h
        }))
        .with_meta(meta);
    if alpha > -1.0 {
        // prox closed form valid while 1 + alpha*lambda > 0
        model.with_prox_oracle(Arc::new(move |lambda: f64, x: &[f64]| {
            let d = 1.0 + alpha * lambda;
            x.iter().map(|v| v / d).collect()
        }))
    } else {
        model
    }
}

// ---------------------------------------------------------------------------
// huber_source: C^1 convex, quadratic x^2/(2 delta) inside |x| <= delta and
// linear |x| - delta/2 outside; gradient clamp(x/delta, -1, 1).
// ---------------------------------------------------------------------------

pub fn huber_source(delta: f64) -> FunctionModel {
    let eval = Arc::new(move |x: &[f64]| {
        let a = x[0].abs();
        if a <= delta {
            x[0] * x[0] / (2.0 * delta)
        } else {
            a - delta / 2.0
        }
    });
    FunctionModel::new(format!("huber_source(delta={delta})"), 1, eval)
        .with_subdiff(Arc::new(move |x: &[f64]| {
            SubdiffSet::Point(vec![(x[0] / delta).clamp(-1.0, 1.0)])
        }))
        .with_patch(Arc::new(move |x: &[f64], _: &[f64]| {
            let tp = 1e-9;
            let a = x[0].abs();
            if (a - delta).abs() <= tp {
                // gradient-graph corner where curvature drops from 1/delta to 0
                let inward = [-x[0].signum(), -x[0].signum() / delta];
                let outward = [x[0].signum(), 0.0];
                Some(curve(
                    vec![inward, outward],
                    vec![
                        AccumStratum::new(
                            "quadratic_side",
                            vec![[1.0, 1.0 / delta], [-1.0, -1.0 / delta]],
                        ),
                        AccumStratum::new("linear_side", HORIZ.to_vec()),
                    ],
                ))
            } else if a < delta {
                Some(GraphPatch::SmoothHessian(vec![vec![1.0 / delta]]))
            } else {
                Some(GraphPatch::SmoothHessian(vec![vec![0.0]]))
            }
        }))
        .with_hessian(Arc::new(move |x: &[f64]| {
            let a = x[0].abs();
            vec![vec![if a < delta { 1.0 / delta } else { 0.0 }]]
        }))
        .with_meta(ModelMeta {
            is_convex: true,
            prox_regular: Some((0.0, 1.0)),
            prox_bounded: Some(ProxBound { alpha: 0.0, beta: 0.0, anchor: vec![0.0] }),
            subdiff_continuous: true,
            quadratic_alpha: None,
            stress_pairs: vec![],
        })
}

// ---------------------------------------------------------------------------
// l1_weighted_square: midpoint discretization of the squared L^2 mass
// integral of x(t) on [0, 1] over m cells, paired with the weighted
// l1 norm sum(|x_i|)/m. Carries the log-pair stress witness whose midpoint
// convexity gap refutes the sigma=2 quadratic shift.
// ---------------------------------------------------------------------------

pub fn l1_weighted_square(m: usize) -> FunctionModel {
    let mf = m as f64;
    let eval = Arc::new(move |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / mf);
    let u: Vec<f64> = (0..m)
        .map(|i| {
            let t = (i as f64 + 0.5) / mf;
            (t.powi(100) + 0.5).ln()
        })
        .collect();
    let v: Vec<f64> = (0..m)
        .map(|i| {
            let t = (i as f64 + 0.5) / mf;
            (1.5 - t).ln()
        })
        .collect();
    FunctionModel::new(format!("l1_weighted_square(m={m})"), m, eval)
        .with_subdiff(Arc::new(move |x: &[f64]| {
            SubdiffSet::Point(x.iter().map(|v| 2.0 * v / mf).collect())
        }))
        .with_patch(Arc::new(move |x: &[f64], _: &[f64]| {
            let n = x.len();
            let mut h = vec![vec![0.0; n]; n];
            for (i, row) in h.iter_mut().enumerate() {
                row[i] = 2.0 / mf;
            }
            Some(GraphPatch::SmoothHessian(h))
        }))
        .with_meta(ModelMeta {
            is_convex: true,
            prox_regular: Some((0.0, 1.0)),
            prox_bounded: Some(ProxBound { alpha: 0.0, beta: 0.0, anchor: vec![0.0; m] }),
            subdiff_continuous: true,
            quadratic_alpha: None,
            stress_pairs: vec![(u, v)],
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_value_is_continuous_across_piece_boundaries() {
        for k in 1..60 {
            let kf = k as f64;
            let x = 1.0 / (kf + 1.0);
            let left = stair_eval(x - 1e-12);
            let right = stair_eval(x + 1e-12);
            assert!((left - right).abs() < 1e-9, "k={k}: {left} vs {right}");
            assert!((stair_eval(x) - x).abs() < 1e-12, "value at 1/(k+1) is 1/(k+1)");
        }
    }

    #[test]
    fn staircase_dominates_abs_with_equality_at_reciprocals() {
        for i in 1..2000 {
            let x = i as f64 / 2000.0;
            assert!(stair_eval(x) >= x - 1e-15);
            assert!(stair_eval(-x) >= x - 1e-15);
        }
        for m in 1..50 {
            let x = 1.0 / m as f64;
            assert!((stair_eval(x) - x).abs() <= 1e-15);
        }
    }

    #[test]
    fn staircase_subdiff_matches_eight_case_table() {
        for k in 2..=8 {
            let kf = k as f64;
            let s = staircase_slope(kf);
            let xc = staircase_junction(kf);
            // left endpoint x = 1/(k+1): vertical segment [0, (k+1)/k]
            assert_eq!(
                stair_subdiff(1.0 / (kf + 1.0)),
                SubdiffSet::interval(0.0, (kf + 1.0) / kf)
            );
            assert_eq!(
                stair_subdiff(-1.0 / (kf + 1.0)),
                SubdiffSet::interval(-(kf + 1.0) / kf, 0.0)
            );
            // ramp interior
            let mid_ramp = 0.5 * (1.0 / (kf + 1.0) + xc);
            assert_eq!(stair_subdiff(mid_ramp), SubdiffSet::Point(vec![s]));
            assert_eq!(stair_subdiff(-mid_ramp), SubdiffSet::Point(vec![-s]));
            // junction
            assert_eq!(
                stair_subdiff(xc),
                SubdiffSet::Points(vec![vec![0.0], vec![s]])
            );
            assert_eq!(
                stair_subdiff(-xc),
                SubdiffSet::Points(vec![vec![0.0], vec![-s]])
            );
            // flat interior
            assert_eq!(stair_subdiff(staircase_flat_mid(kf)), SubdiffSet::Point(vec![0.0]));
        }
        assert_eq!(stair_subdiff(0.0), SubdiffSet::interval(-1.0, 1.0));
        assert_eq!(stair_subdiff(1.0), SubdiffSet::interval(0.0, f64::INFINITY));
        assert_eq!(stair_subdiff(1.5), SubdiffSet::Empty);
    }

    #[test]
    fn staircase_patches_exist_on_table_points() {
        let phi = staircase();
        for k in 2..=10 {
            let kf = k as f64;
            for (x, xs) in [
                (staircase_flat_mid(kf), 0.0),
                (staircase_junction(kf), 0.0),
                (staircase_junction(kf), staircase_slope(kf)),
                (1.0 / (kf + 1.0), 0.0),
                (1.0 / (kf + 1.0), (kf + 1.0) / kf),
                (1.0 / (kf + 1.0), 0.5 * (kf + 1.0) / kf),
            ] {
                assert!(phi.patch_at(&[x], &[xs]).is_some(), "missing patch at ({x},{xs})");
                assert!(phi.patch_at(&[-x], &[-xs]).is_some(), "missing mirror at ({x},{xs})");
            }
        }
        assert!(phi.patch_at(&[0.0], &[0.0]).is_some());
        assert!(phi.patch_at(&[0.0], &[1.0]).is_some());
        assert!(phi.patch_at(&[0.0], &[-1.0]).is_some());
        assert!(phi.patch_at(&[0.0], &[0.5]).is_some());
    }

    #[test]
    fn zero_one_shape() {
        let phi = zero_one();
        assert_eq!(phi.eval(&[0.0]), 0.0);
        assert_eq!(phi.eval(&[1e-12]), 1.0);
        assert_eq!(phi.eval(&[3.0]), 1.0);
        assert!(phi.subdiff(&[0.0]).unwrap().contains(&[42.0], 0.0));
        assert_eq!(phi.subdiff(&[0.2]).unwrap(), SubdiffSet::Point(vec![0.0]));
    }

    #[test]
    fn abs_prox_oracle_is_soft_threshold() {
        let phi = abs_model();
        assert_eq!(phi.prox_closed_form(1.0, &[0.5]).unwrap(), vec![0.0]);
        assert_eq!(phi.prox_closed_form(1.0, &[2.0]).unwrap(), vec![1.0]);
        assert_eq!(phi.prox_closed_form(1.0, &[-2.0]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn quadratic_oracles() {
        let phi = quadratic(2.0, 2);
        assert_eq!(phi.eval(&[1.0, 2.0]), 5.0);
        assert_eq!(
            phi.subdiff(&[1.0, 2.0]).unwrap(),
            SubdiffSet::Point(vec![2.0, 4.0])
        );
        assert_eq!(phi.prox_closed_form(0.5, &[2.0, 4.0]).unwrap(), vec![1.0, 2.0]);
        let neg = quadratic(-2.0, 1);
        assert_eq!(neg.eval(&[2.0]), -4.0);
        assert!(neg.prox_closed_form(1.0, &[1.0]).is_none());
        assert_eq!(neg.meta.prox_bounded.as_ref().unwrap().alpha, -1.0);
    }

    #[test]
    fn huber_gradient_continuous_at_the_seam() {
        let phi = huber_source(0.5);
        let g_in = match phi.subdiff(&[0.5 - 1e-12]).unwrap() {
            SubdiffSet::Point(p) => p[0],
            _ => panic!(),
        };
        let g_out = match phi.subdiff(&[0.5 + 1e-12]).unwrap() {
            SubdiffSet::Point(p) => p[0],
            _ => panic!(),
        };
        assert!((g_in - 1.0).abs() < 1e-9 && (g_out - 1.0).abs() < 1e-9);
        assert!((phi.eval(&[0.5]) - 0.25).abs() < 1e-15);
        assert!((phi.eval(&[2.0]) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn l1_model_eval_subdiff_and_stress_pair() {
        let phi = l1_weighted_square(4);
        assert!((phi.eval(&[1.0, 1.0, 1.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(
            phi.subdiff(&[2.0, 0.0, 0.0, 0.0]).unwrap(),
            SubdiffSet::Point(vec![1.0, 0.0, 0.0, 0.0])
        );
        let (u, v) = &phi.meta.stress_pairs[0];
        assert_eq!(u.len(), 4);
        // first midpoint t = 1/8: u = ln(0.5 + tiny), v = ln(1.375)
        assert!((u[0] - (0.125f64.powi(100) + 0.5).ln()).abs() < 1e-15);
        assert!((v[0] - 1.375f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn lookup_validates_names_and_params() {
        let mut p = BTreeMap::new();
        assert!(gallery_lookup("staircase", &p).is_ok());
        assert!(gallery_lookup("nope", &p).is_err());
        p.insert("alpha".into(), 2.0);
        assert!(gallery_lookup("quadratic", &p).is_ok());
        assert!(gallery_lookup("staircase", &p).is_err());
        let mut q = BTreeMap::new();
        q.insert("m".into(), 1.5);
        assert!(gallery_lookup("l1_weighted_square", &q).is_err());
    }
}
