//! Monotonicity certifiers on sampled subdifferential graphs: pairwise gap
//! statistics, localized (strong) monotonicity, and a one-dimensional
//! resolvent probe for single-valuedness and continuity.

use crate::error::{Error, Result};
use crate::models::{graph_samples, FunctionModel, GraphSample, Window};
use crate::norm_space::{dot, NormEval, NormModel};
use crate::plan::{linspace, SamplePlan};
use crate::report::{json_num, json_vec, witness_inputs, CertificateReport, SlackAccumulator, Witness};
use crate::tol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::Value;

/// Unordered index pairs over `n_items`: exhaustive below the pair cap, a
/// fixed-seed subsample of exactly the cap size above it. Standalone twin of
/// `SamplePlan::pair_indices` for gap scans that receive bare sample lists.
fn capped_pairs(n_items: usize) -> Vec<(usize, usize)> {
    if n_items < 2 {
        return Vec::new();
    }
    let total = n_items * (n_items - 1) / 2;
    if total <= tol::PAIR_CAP {
        let mut out = Vec::with_capacity(total);
        for i in 0..n_items {
            for j in (i + 1)..n_items {
                out.push((i, j));
            }
        }
        return out;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(tol::PAIR_SALT);
    let mut out = Vec::with_capacity(tol::PAIR_CAP);
    while out.len() < tol::PAIR_CAP {
        let i = rng.gen_range(0..n_items);
        let j = rng.gen_range(0..n_items);
        if i != j {
            out.push((i.min(j), i.max(j)));
        }
    }
    out
}

/// Minimum of `<x1* - x2*, x1 - x2> - penalty(s1, s2)` over capped sample
/// pairs, with the minimizing pair as witness.
fn gap_with<P>(samples: &[GraphSample], penalty: P) -> Result<(f64, (GraphSample, GraphSample))>
where
    P: Fn(&GraphSample, &GraphSample) -> Result<f64>,
{
    if samples.len() < 2 {
        return Err(Error::input("gap scans need at least two graph samples"));
    }
    let mut best = f64::INFINITY;
    let mut arg = (0usize, 1usize);
    for (i, j) in capped_pairs(samples.len()) {
        let (a, b) = (&samples[i], &samples[j]);
        let dx: Vec<f64> = a.x.iter().zip(&b.x).map(|(p, q)| p - q).collect();
        let dstar: Vec<f64> = a.xstar.iter().zip(&b.xstar).map(|(p, q)| p - q).collect();
        let val = dot(&dstar, &dx) - penalty(a, b)?;
        if val < best {
            best = val;
            arg = (i, j);
        }
    }
    Ok((best, (samples[arg.0].clone(), samples[arg.1].clone())))
}

/// Plain monotonicity gap: min `<x1* - x2*, x1 - x2>` over sample pairs.
/// Nonnegative (within tolerance) on samples of a monotone graph.
pub fn monotone_gap(samples: &[GraphSample]) -> Result<(f64, (GraphSample, GraphSample))> {
    gap_with(samples, |_, _| Ok(0.0))
}

/// Strong monotonicity gap in duality form: min
/// `<dx*, dx> - sigma <J(x1) - J(x2), dx>` with J the duality map of `m`.
pub fn strong_gap_duality(
    samples: &[GraphSample],
    sigma: f64,
    m: &NormModel,
) -> Result<(f64, (GraphSample, GraphSample))> {
    gap_with(samples, |a, b| {
        let ja = m.duality_map(&a.x)?;
        let jb = m.duality_map(&b.x)?;
        let dj: Vec<f64> = ja.iter().zip(&jb).map(|(p, q)| p - q).collect();
        let dx: Vec<f64> = a.x.iter().zip(&b.x).map(|(p, q)| p - q).collect();
        Ok(sigma * dot(&dj, &dx))
    })
}

/// Strong monotonicity gap in norm form: min `<dx*, dx> - sigma ||dx||^2`
/// with the norm evaluated by `ne` (admits p = 1 and other non-smooth norms).
pub fn strong_gap_norm(
    samples: &[GraphSample],
    sigma: f64,
    ne: &NormEval,
) -> Result<(f64, (GraphSample, GraphSample))> {
    gap_with(samples, |a, b| {
        let d = ne.dist(&a.x, &b.x)?;
        Ok(sigma * d * d)
    })
}

/// Which strong-monotonicity penalty a certification run uses.
#[derive(Debug, Clone)]
pub enum GapKind {
    /// `sigma <J x1 - J x2, x1 - x2>` with J from the given norm model.
    Duality(NormModel),
    /// `sigma ||x1 - x2||^2` in the given (possibly non-smooth) norm.
    Norm(NormEval),
}

impl GapKind {
    fn label(&self) -> &'static str {
        match self {
            GapKind::Duality(_) => "duality",
            GapKind::Norm(_) => "norm",
        }
    }
}

/// Certifies sigma-strong monotonicity of the subdifferential graph localized
/// by the window: every capped pair of graph samples must satisfy the chosen
/// gap inequality with slack >= -tol. sigma = 0 is plain local monotonicity.
/// Fewer than two samples yields a vacuous certificate (flagged).
pub fn local_mono_certify(
    phi: &FunctionModel,
    w: &Window,
    sigma: f64,
    kind: &GapKind,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::input("sigma must be finite and nonnegative"));
    }
    let samples = graph_samples(phi, w, plan, m)?;
    let mut acc = SlackAccumulator::new("local_monotonicity", tol::CERT_TOL);
    for (i, j) in plan.pair_indices(samples.len()) {
        let (a, b) = (&samples[i], &samples[j]);
        let dx: Vec<f64> = a.x.iter().zip(&b.x).map(|(p, q)| p - q).collect();
        let dstar: Vec<f64> = a.xstar.iter().zip(&b.xstar).map(|(p, q)| p - q).collect();
        let pairing = dot(&dstar, &dx);
        let penalty = match kind {
            GapKind::Duality(nm) => {
                let ja = nm.duality_map(&a.x)?;
                let jb = nm.duality_map(&b.x)?;
                let dj: Vec<f64> = ja.iter().zip(&jb).map(|(p, q)| p - q).collect();
                sigma * dot(&dj, &dx)
            }
            GapKind::Norm(ne) => {
                let d = ne.dist(&a.x, &b.x)?;
                sigma * d * d
            }
        };
        acc.push(pairing - penalty, || Witness {
            inputs: witness_inputs(&[
                ("x1", json_vec(&a.x)),
                ("x1_star", json_vec(&a.xstar)),
                ("x2", json_vec(&b.x)),
                ("x2_star", json_vec(&b.xstar)),
            ]),
            lhs: pairing,
            rhs: penalty,
            slack: pairing - penalty,
        });
    }
    acc.param("sigma", json_num(sigma));
    acc.param("kind", Value::String(kind.label().into()));
    acc.param("graph_samples", Value::from(samples.len() as u64));
    acc.param("window", serde_json::to_value(w).expect("window serializes"));
    Ok(acc.finish())
}

/// Resolvent probe grid sizes: target covectors and the x search grid.
const Y_GRID: usize = 41;
const X_GRID: usize = 2001;
/// Bisection depth when refining a bracketed inclusion.
const BISECT_ITERS: u32 = 60;

/// Envelope of a 1-D set shifted by `shift`, as a closed interval hull;
/// None when empty. Used only to detect bracketed crossings — membership
/// itself is tested piecewise so gaps inside the hull never count as hits.
fn set_hull(sd: &crate::models::SubdiffSet, shift: f64) -> Option<(f64, f64)> {
    use crate::models::SubdiffSet::*;
    let minmax = |vals: &mut dyn Iterator<Item = f64>| -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in vals {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo <= hi {
            Some((lo + shift, hi + shift))
        } else {
            None
        }
    };
    match sd {
        Empty => None,
        Point(p) => Some((p[0] + shift, p[0] + shift)),
        Points(ps) => minmax(&mut ps.iter().map(|p| p[0])),
        Intervals(iv) => minmax(&mut iv.iter().flat_map(|(l, h)| [*l, *h].into_iter())),
        Hull(g) => minmax(&mut g.iter().map(|p| p[0])),
    }
}

/// Probes the localized resolvent `y* -> {x : y* in subdiff(x) + lambda J(x)}`
/// on a 1-D model: for each target covector on a grid across the window's
/// dual ball, solutions are located by interval inclusion on a dense x grid
/// plus bisection on bracketed crossings. The certificate requires (a) each
/// solved target to have a single-valued solution cluster and (b) adjacent
/// solved targets to vary monotonically; the displacement/target-displacement
/// ratios form the continuity table in params. Targets with no located
/// solution are reported as coverage gaps, not refutations.
pub fn resolvent_probe(
    phi: &FunctionModel,
    lambda: f64,
    w: &Window,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    if phi.n != 1 {
        return Err(Error::capability("the resolvent probe is one-dimensional"));
    }
    if plan.dim() != 1 {
        return Err(Error::Dimension { expected: 1, got: plan.dim() });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::input("lambda must be finite and positive"));
    }
    w.validate_on(phi, tol::CERT_TOL)?;
    let cx = w.center_x[0];
    let unit_norm = m.norm(&[1.0])?;
    let unit_dual = m.dual_norm(&[1.0])?;
    let rx = w.r1 / unit_norm;
    let ry = w.r2 / unit_dual;
    let ybar = w.center_xstar[0] + lambda * m.duality_map(&w.center_x)?[0];

    let shift_at = |x: f64| -> Result<f64> { Ok(lambda * m.duality_map(&[x])?[0]) };
    let xs = linspace(cx - rx, cx + rx, X_GRID);
    let sets: Vec<(crate::models::SubdiffSet, f64)> = xs
        .iter()
        .map(|&x| Ok((phi.subdiff(&[x])?, shift_at(x)?)))
        .collect::<Result<_>>()?;
    let ranges: Vec<Option<(f64, f64)>> = sets.iter().map(|(sd, sh)| set_hull(sd, *sh)).collect();

    let mut acc = SlackAccumulator::new("resolvent_probe", tol::CERT_TOL);
    let mut coverage_gaps: Vec<f64> = Vec::new();
    let mut solved: Vec<Option<f64>> = Vec::new(); // unique solution per target
    let y_targets = linspace(ybar - ry, ybar + ry, Y_GRID);
    for &y in &y_targets {
        let mut hits: Vec<f64> = Vec::new();
        for (i, &x) in xs.iter().enumerate() {
            let (sd, shift) = &sets[i];
            if sd.contains(&[y - shift], 1e-12) {
                hits.push(x);
                continue;
            }
            // Bracketed crossing between consecutive grid points.
            if i + 1 < xs.len() {
                if let (Some(a), Some(b)) = (ranges[i], ranges[i + 1]) {
                    let below_a = a.1 < y;
                    let above_a = a.0 > y;
                    let below_b = b.1 < y;
                    let above_b = b.0 > y;
                    if (below_a && above_b) || (above_a && below_b) {
                        if let Some(x_hit) = bisect_hit(phi, &shift_at, xs[i], xs[i + 1], y)? {
                            hits.push(x_hit);
                        }
                    }
                }
            }
        }
        if hits.is_empty() {
            coverage_gaps.push(y);
            solved.push(None);
            continue;
        }
        hits.sort_by(f64::total_cmp);
        let diameter = hits[hits.len() - 1] - hits[0];
        let slack = tol::CLUSTER_SINGLE - diameter;
        let rep = 0.5 * (hits[0] + hits[hits.len() - 1]);
        let lo_hit = hits[0];
        let hi_hit = hits[hits.len() - 1];
        acc.push(slack, || Witness {
            inputs: witness_inputs(&[
                ("y_star", json_num(y)),
                ("x_min", json_num(lo_hit)),
                ("x_max", json_num(hi_hit)),
                ("diameter", json_num(diameter)),
            ]),
            lhs: tol::CLUSTER_SINGLE,
            rhs: diameter,
            slack,
        });
        solved.push(if diameter <= tol::CLUSTER_SINGLE { Some(rep) } else { None });
    }

    // Continuity / orientation across adjacent solved targets.
    let mut table: Vec<Value> = Vec::new();
    let mut lipschitz_max = 0.0f64;
    for i in 0..solved.len().saturating_sub(1) {
        if let (Some(x1), Some(x2)) = (solved[i], solved[i + 1]) {
            let (y1, y2) = (y_targets[i], y_targets[i + 1]);
            let dy = y2 - y1;
            let slope = (x2 - x1) / dy;
            let ratio = slope.abs();
            lipschitz_max = lipschitz_max.max(ratio);
            table.push(Value::Array(vec![
                json_num(y1),
                json_num(y2),
                json_num(x2 - x1),
                json_num(ratio),
            ]));
            acc.push(slope, || Witness {
                inputs: witness_inputs(&[
                    ("y1", json_num(y1)),
                    ("y2", json_num(y2)),
                    ("x1", json_num(x1)),
                    ("x2", json_num(x2)),
                ]),
                lhs: slope,
                rhs: 0.0,
                slack: slope,
            });
        }
    }
    acc.param("lambda", json_num(lambda));
    acc.param("ybar_star", json_num(ybar));
    acc.param("y_grid", Value::from(Y_GRID as u64));
    acc.param("x_grid", Value::from(X_GRID as u64));
    acc.param("lipschitz_max", json_num(lipschitz_max));
    acc.param("modulus_table", Value::Array(table));
    acc.param(
        "coverage_gaps",
        Value::Array(coverage_gaps.iter().map(|y| json_num(*y)).collect()),
    );
    if !coverage_gaps.is_empty() {
        acc.note(format!(
            "{} target covector(s) had no located solution; treated as coverage gaps, \
             not refutations",
            coverage_gaps.len()
        ));
    }
    acc.note("slacks mix single-valuedness (cluster) and orientation (slope) terms");
    Ok(acc.finish())
}

/// Refines a bracketed inclusion `y in subdiff(x) + shift(x)` between `a` and
/// `b` by bisection on the set-range; returns None when the crossing is a
/// graph jump with no solution (the inclusion never closes).
fn bisect_hit<S>(phi: &FunctionModel, shift_at: &S, mut a: f64, mut b: f64, y: f64) -> Result<Option<f64>>
where
    S: Fn(f64) -> Result<f64>,
{
    // 0: exact member; -1/+1: set lies below/above y; 2: y falls in a hull
    // gap or the set is empty (no orientation, no solution here).
    let side = |x: f64| -> Result<i8> {
        let sd = phi.subdiff(&[x])?;
        let sh = shift_at(x)?;
        if sd.contains(&[y - sh], 1e-12) {
            return Ok(0);
        }
        Ok(match set_hull(&sd, sh) {
            Some((_, hi)) if hi < y => -1,
            Some((lo, _)) if lo > y => 1,
            _ => 2,
        })
    };
    let mut sa = side(a)?;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (a + b);
        let sm = side(mid)?;
        if sm == 0 {
            return Ok(Some(mid));
        }
        if sm == 2 {
            return Ok(None);
        }
        if sm == sa {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        sa = side(a)?;
    }
    // The bracket collapsed without the inclusion closing: a jump across y.
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::gallery;

    fn line_samples(slope: f64, count: usize) -> Vec<GraphSample> {
        (0..count)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / (count - 1) as f64;
                GraphSample { x: vec![x], xstar: vec![slope * x], fx: 0.5 * slope * x * x }
            })
            .collect()
    }

    #[test]
    fn monotone_gap_sign_matches_slope_sign() {
        let up = line_samples(2.0, 21);
        let (gap, _) = monotone_gap(&up).unwrap();
        assert!(gap > 0.0);
        let down = line_samples(-2.0, 21);
        let (gap, (w1, w2)) = monotone_gap(&down).unwrap();
        assert!(gap < 0.0);
        assert_ne!(w1.x, w2.x);
    }

    #[test]
    fn strong_gaps_agree_for_euclidean_norm() {
        let m = NormModel::euclidean(1);
        let ne = NormEval::lp(m.clone());
        let samples = line_samples(2.0, 21);
        let (gd, _) = strong_gap_duality(&samples, 2.0, &m).unwrap();
        let (gn, _) = strong_gap_norm(&samples, 2.0, &ne).unwrap();
        assert!((gd - gn).abs() < 1e-12);
        assert!(gd.abs() < 1e-12, "slope-2 line is exactly 2-strongly monotone");
        let (g3, _) = strong_gap_duality(&samples, 3.0, &m).unwrap();
        assert!(g3 < -1e-3);
    }

    #[test]
    fn gap_requires_two_samples() {
        assert!(monotone_gap(&line_samples(1.0, 1)).is_err());
    }

    #[test]
    fn step_graph_is_vacuously_strongly_monotone_at_origin() {
        let phi = gallery::zero_one();
        let m = NormModel::euclidean(1);
        let w = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 0.5).unwrap();
        let plan = SamplePlan::centered(7, 65, 16, &[0.0], 0.5).unwrap();
        let r =
            local_mono_certify(&phi, &w, 1.0, &GapKind::Duality(m.clone()), &m, &plan).unwrap();
        assert!(r.is_certified());
        assert_eq!(r.margin, Some(0.0));
    }

    #[test]
    fn concave_square_refutes_plain_monotonicity() {
        let phi = gallery::quadratic(-2.0, 1);
        let m = NormModel::euclidean(1);
        let w = Window::new(vec![0.0], vec![0.0], 1.0, 3.0, 1.0).unwrap();
        let plan = SamplePlan::centered(7, 65, 16, &[0.0], 1.0).unwrap();
        let r = local_mono_certify(&phi, &w, 0.0, &GapKind::Duality(m.clone()), &m, &plan).unwrap();
        assert!(!r.is_certified());
    }

    #[test]
    fn resolvent_of_half_square_is_half_lipschitz() {
        let phi = gallery::quadratic(1.0, 1);
        let m = NormModel::euclidean(1);
        let w = Window::new(vec![0.0], vec![0.0], 1.0, 0.5, 1.0).unwrap();
        let plan = SamplePlan::centered(7, 65, 16, &[0.0], 1.0).unwrap();
        let r = resolvent_probe(&phi, 1.0, &w, &m, &plan).unwrap();
        assert!(r.is_certified(), "margin {:?}", r.margin);
        let lip = r.params["lipschitz_max"].as_f64().unwrap();
        assert!((lip - 0.5).abs() < 1e-6, "lipschitz {lip}");
    }

    #[test]
    fn resolvent_of_kink_collapses_to_center() {
        let phi = gallery::abs_model();
        let m = NormModel::euclidean(1);
        let w = Window::new(vec![0.0], vec![0.5], 0.5, 0.4, 1.0).unwrap();
        let plan = SamplePlan::centered(7, 65, 16, &[0.0], 0.5).unwrap();
        let r = resolvent_probe(&phi, 1.0, &w, &m, &plan).unwrap();
        assert!(r.is_certified());
        let lip = r.params["lipschitz_max"].as_f64().unwrap();
        assert!(lip.abs() < 1e-9, "resolvent is constant 0 on this window: {lip}");
    }

    #[test]
    fn resolvent_of_concave_square_reverses_orientation() {
        let phi = gallery::quadratic(-2.0, 1);
        let m = NormModel::euclidean(1);
        let w = Window::new(vec![0.0], vec![0.0], 1.0, 0.5, 1.0).unwrap();
        let plan = SamplePlan::centered(7, 65, 16, &[0.0], 1.0).unwrap();
        let r = resolvent_probe(&phi, 1.0, &w, &m, &plan).unwrap();
        assert!(!r.is_certified());
        assert!(r.margin.unwrap() < -0.5, "slope is -1: {:?}", r.margin);
    }

    #[test]
    fn capped_pairs_is_deterministic_and_bounded() {
        let a = capped_pairs(1000);
        let b = capped_pairs(1000);
        assert_eq!(a.len(), tol::PAIR_CAP);
        assert_eq!(a, b);
        assert!(a.iter().all(|(i, j)| i < j && *j < 1000));
        assert_eq!(capped_pairs(5).len(), 10);
    }
}
