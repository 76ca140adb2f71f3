//! First-order regularity certifiers: regular- and proximal-subgradient
//! membership tests, prox-regularity with a fitted quadratic modulus, and
//! subdifferential continuity.
//!
//! Every check is a finite-sample surrogate: CERTIFIED means no sampled
//! inequality failed beyond tolerance, REFUTED carries concrete witnesses.
//! Probe balls and quadratic penalty terms are Euclidean; localization
//! windows go through the shared graph sampler and use the model norm.

use crate::error::{check_dim, Error, Result};
use crate::models::{collect_graph, graph_samples, FunctionModel, GraphSample, Window};
use crate::norm_space::{dot, NormModel};
use crate::plan::{ball_points, SamplePlan};
use crate::report::{json_num, json_vec, witness_inputs, CertificateReport, SlackAccumulator, Witness};
use crate::tol;
use serde_json::Value;

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn enorm_sq(d: &[f64]) -> f64 {
    d.iter().map(|t| t * t).sum()
}

/// Common validation: dimensions agree, the base value is finite.
fn base_value(phi: &FunctionModel, x: &[f64], xstar: &[f64], plan: &SamplePlan) -> Result<f64> {
    check_dim(phi.n, x)?;
    check_dim(phi.n, xstar)?;
    if plan.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: plan.dim() });
    }
    let fx = phi.eval(x);
    if !fx.is_finite() {
        return Err(Error::input("base point lies outside the domain (infinite value)"));
    }
    Ok(fx)
}

/// Requires the covector to lie in the subdifferential at the point (when the
/// model carries an oracle).
fn require_on_graph(phi: &FunctionModel, x: &[f64], xstar: &[f64]) -> Result<()> {
    if phi.has_subdiff() && !phi.subdiff(x)?.contains(xstar, tol::CERT_TOL) {
        return Err(Error::input(
            "covector is not in the subdifferential at the base point",
        ));
    }
    Ok(())
}

/// Smallest modulus in {0, 1, 2, 4, ..., R_MAX} at least `r_star`; None when
/// the fit exceeds the cap.
fn dyadic_fit(r_star: f64) -> Option<f64> {
    if r_star <= 0.0 {
        return Some(0.0);
    }
    let mut r = 1.0;
    while r <= tol::R_MAX {
        if r_star <= r {
            return Some(r);
        }
        r *= 2.0;
    }
    None
}

/// Tests whether a covector behaves as a regular subgradient at `x`: the
/// first-order difference quotient
///
/// ```text
/// [phi(x') - phi(x) - <xstar, x' - x>] / |x' - x|
/// ```
///
/// is scanned over sampled `x'` in Euclidean balls of radius `radius`,
/// `radius/4`, and `radius/16`. Smooth curvature contributes O(rho) to the
/// quotient, so the per-scale slack is `quotient + CURVATURE_ALLOWANCE * rho`;
/// the verdict therefore tightens toward the base tolerance as the scale
/// shrinks. Points with infinite value satisfy the inequality trivially and
/// are skipped.
pub fn regular_subgradient_check(
    phi: &FunctionModel,
    x: &[f64],
    xstar: &[f64],
    radius: f64,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::input("probe radius must be finite and positive"));
    }
    let fx = base_value(phi, x, xstar, plan)?;
    let mut acc = SlackAccumulator::new("regular_subgradient", tol::CERT_TOL);
    let scales = [radius, radius / 4.0, radius / 16.0];
    for rho in scales {
        let allowance = tol::CURVATURE_ALLOWANCE * rho;
        for xp in ball_points(plan, x, rho)? {
            let d = sub(&xp, x);
            let dist = enorm_sq(&d).sqrt();
            if dist == 0.0 {
                continue;
            }
            let fxp = phi.eval(&xp);
            if !fxp.is_finite() {
                continue;
            }
            let quotient = (fxp - fx - dot(xstar, &d)) / dist;
            acc.push(quotient + allowance, || Witness {
                inputs: witness_inputs(&[
                    ("x_prime", json_vec(&xp)),
                    ("scale", json_num(rho)),
                    ("quotient", json_num(quotient)),
                ]),
                lhs: quotient,
                rhs: -allowance,
                slack: quotient + allowance,
            });
        }
    }
    acc.param("radius", json_num(radius));
    acc.param("scales", Value::Array(scales.iter().map(|s| json_num(*s)).collect()));
    acc.param("curvature_allowance", json_num(tol::CURVATURE_ALLOWANCE));
    acc.note(
        "difference quotients scanned at three shrinking scales; each scale's slack \
         includes a curvature allowance proportional to the scale",
    );
    Ok(acc.finish())
}

/// Fits the smallest dyadic modulus `r` such that
///
/// ```text
/// phi(x) >= phi(xbar) + <xbar_star, x - xbar> - (r/2) |x - xbar|^2
/// ```
///
/// holds on sampled `x` in a Euclidean ball around `xbar`; the ball radius is
/// taken from {h, h/4, h/16} where h is the plan's largest half-width, and
/// the radius with the smallest fitted modulus wins. CERTIFIED reports the
/// fitted `r` and the radius in params; REFUTED means even r = R_MAX fails
/// at every radius.
pub fn proximal_subgradient_check(
    phi: &FunctionModel,
    xbar: &[f64],
    xbar_star: &[f64],
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    let fx = base_value(phi, xbar, xbar_star, plan)?;
    let h = plan
        .box_lo
        .iter()
        .zip(&plan.box_hi)
        .map(|(lo, hi)| 0.5 * (hi - lo))
        .fold(0.0f64, f64::max);
    if h <= 0.0 {
        return Err(Error::input("sample plan box is degenerate (zero half-width)"));
    }
    let radii = [h, h / 4.0, h / 16.0];
    let points: Vec<(f64, Vec<Vec<f64>>)> = radii
        .iter()
        .map(|&eps| Ok((eps, ball_points(plan, xbar, eps)?)))
        .collect::<Result<_>>()?;

    // Pass 1: the exact modulus each radius requires.
    let mut best: Option<(f64, f64)> = None; // (r_star, eps)
    for (eps, pts) in &points {
        let mut r_star = 0.0f64;
        for xp in pts {
            let d = sub(xp, xbar);
            let d2 = enorm_sq(&d);
            if d2 == 0.0 {
                continue;
            }
            let fxp = phi.eval(xp);
            if !fxp.is_finite() {
                continue;
            }
            let need = fx + dot(xbar_star, &d) - fxp;
            if need > tol::CERT_TOL {
                r_star = r_star.max(2.0 * (need - tol::CERT_TOL) / d2);
            }
        }
        if best.map(|(r, _)| r_star < r).unwrap_or(true) {
            best = Some((r_star, *eps));
        }
    }
    let (r_star, eps) = best.expect("radius list is nonempty");
    let fitted = dyadic_fit(r_star);
    let r_used = fitted.unwrap_or(tol::R_MAX);

    // Pass 2: slacks at the fitted modulus on the chosen ball.
    let mut acc = SlackAccumulator::new("proximal_subgradient", tol::CERT_TOL);
    let pts = &points.iter().find(|(e, _)| *e == eps).expect("chosen radius exists").1;
    for xp in pts {
        let d = sub(xp, xbar);
        let d2 = enorm_sq(&d);
        if d2 == 0.0 {
            continue;
        }
        let fxp = phi.eval(xp);
        if !fxp.is_finite() {
            continue;
        }
        let lhs = fxp;
        let rhs = fx + dot(xbar_star, &d) - 0.5 * r_used * d2;
        acc.push(lhs - rhs, || Witness {
            inputs: witness_inputs(&[("x", json_vec(xp)), ("epsilon", json_num(eps))]),
            lhs,
            rhs,
            slack: lhs - rhs,
        });
    }
    acc.param("r", fitted.map(json_num).unwrap_or(Value::Null));
    acc.param("r_star", json_num(r_star));
    acc.param("epsilon", json_num(eps));
    acc.param("r_max", json_num(tol::R_MAX));
    if fitted.is_none() {
        acc.note(format!(
            "no modulus up to {} admits the quadratic minorant on these samples; \
             slacks reported at the cap",
            tol::R_MAX
        ));
    }
    Ok(acc.finish())
}

/// Dyadic probe offsets around a graph point: `u ± r1·2^-j e_i`, kept inside
/// the window's x-ball. These target violations that concentrate at vanishing
/// distance from a sampled graph point (kinks, steps), which a uniform grid
/// cannot resolve.
fn local_probes(u: &[f64], w: &Window, m: &NormModel) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for axis in 0..u.len() {
        for j in 0..=40u32 {
            let step = w.r1 * 0.5f64.powi(j as i32);
            for sign in [1.0, -1.0] {
                let mut p = u.to_vec();
                p[axis] += sign * step;
                if w.contains_x(m, &p)? {
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

/// Certifies prox-regularity at `(xbar, xbar_star)` relative to the window:
/// fits the smallest dyadic `r` such that
///
/// ```text
/// phi(x) >= phi(u) + <u*, x - u> - (r/2) |x - u|^2
/// ```
///
/// holds for every localized graph sample `(u, u*)` (x-ball, dual-norm
/// x*-ball, and sublevel filter all from the window) and every sampled
/// `x` in the window's x-ball — both a global ball scan and dyadic probes
/// clustered at each graph point. REFUTED means no modulus up to R_MAX works.
pub fn prox_regularity_certify(
    phi: &FunctionModel,
    xbar: &[f64],
    xbar_star: &[f64],
    w: &Window,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    base_value(phi, xbar, xbar_star, plan)?;
    require_on_graph(phi, xbar, xbar_star)?;
    let samples = graph_samples(phi, w, plan, m)?;
    let xs_global = ball_points(plan, &w.center_x, w.r1)?;
    let locals: Vec<Vec<Vec<f64>>> = samples
        .iter()
        .map(|s| local_probes(&s.x, w, m))
        .collect::<Result<_>>()?;

    // Pass 1: exact modulus required by the sampled pairs.
    let mut r_star = 0.0f64;
    {
        let mut probe = |u: &GraphSample, x: &[f64]| {
            let fxp = phi.eval(x);
            if !fxp.is_finite() {
                return;
            }
            let d = sub(x, &u.x);
            let d2 = enorm_sq(&d);
            if d2 == 0.0 {
                return;
            }
            let need = u.fx + dot(&u.xstar, &d) - fxp;
            if need > tol::CERT_TOL {
                r_star = r_star.max(2.0 * (need - tol::CERT_TOL) / d2);
            }
        };
        for (u, loc) in samples.iter().zip(&locals) {
            for x in &xs_global {
                probe(u, x);
            }
            for x in loc {
                probe(u, x);
            }
        }
    }
    let fitted = dyadic_fit(r_star);
    let r_used = fitted.unwrap_or(tol::R_MAX);

    // Pass 2: slacks at the fitted modulus.
    let mut acc = SlackAccumulator::new("prox_regularity", tol::CERT_TOL);
    {
        let mut push = |u: &GraphSample, x: &[f64]| {
            let fxp = phi.eval(x);
            if !fxp.is_finite() {
                return;
            }
            let d = sub(x, &u.x);
            let d2 = enorm_sq(&d);
            if d2 == 0.0 {
                return;
            }
            let lhs = fxp;
            let rhs = u.fx + dot(&u.xstar, &d) - 0.5 * r_used * d2;
            acc.push(lhs - rhs, || Witness {
                inputs: witness_inputs(&[
                    ("u", json_vec(&u.x)),
                    ("u_star", json_vec(&u.xstar)),
                    ("x", json_vec(x)),
                ]),
                lhs,
                rhs,
                slack: lhs - rhs,
            });
        };
        for (u, loc) in samples.iter().zip(&locals) {
            for x in &xs_global {
                push(u, x);
            }
            for x in loc {
                push(u, x);
            }
        }
    }
    acc.param("r", fitted.map(json_num).unwrap_or(Value::Null));
    acc.param("r_star", json_num(r_star));
    acc.param("r_max", json_num(tol::R_MAX));
    acc.param("window", serde_json::to_value(w).expect("window serializes"));
    acc.param("graph_samples", Value::from(samples.len() as u64));
    acc.note("quadratic penalty measured in the Euclidean norm");
    if fitted.is_none() {
        acc.note(format!(
            "no modulus up to {} admits the quadratic minorant on these samples; \
             slacks reported at the cap",
            tol::R_MAX
        ));
    }
    Ok(acc.finish())
}

/// Value tolerances at which subdifferential continuity is probed.
const CONTINUITY_EPS: [f64; 2] = [0.1, 0.01];

/// Certifies subdifferential continuity at `(xbar, xbar_star)`: for each
/// value tolerance eps in {0.1, 0.01}, searches `delta_grid` for a delta such
/// that every graph sample with `x` in the delta-ball and `x*` in the
/// delta-dual-ball (no sublevel filter) has `|phi(x) - phi(xbar)| < eps`.
/// CERTIFIED when every eps admits such a delta; the failing eps's slack is
/// `eps - best_gap` where best_gap is the smallest worst-case value gap over
/// the grid.
pub fn subdiff_continuity_check(
    phi: &FunctionModel,
    xbar: &[f64],
    xbar_star: &[f64],
    delta_grid: &[f64],
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    let fx = base_value(phi, xbar, xbar_star, plan)?;
    require_on_graph(phi, xbar, xbar_star)?;
    if delta_grid.is_empty() || delta_grid.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::input("delta grid must be nonempty with positive finite entries"));
    }
    let mut acc = SlackAccumulator::new("subdiff_continuity", tol::CERT_TOL);
    for &eps in &CONTINUITY_EPS {
        let mut chosen: Option<f64> = None;
        let mut best_gap = f64::INFINITY;
        let mut best_witness: Option<GraphSample> = None;
        for &delta in delta_grid {
            let local = SamplePlan::centered(plan.seed, plan.grid_per_axis, plan.qmc_points, xbar, delta)?;
            let samples = collect_graph(
                phi,
                &local,
                m,
                Some((xbar, delta)),
                Some((xbar_star, delta)),
                None,
            )?;
            let mut gap = 0.0f64;
            let mut worst: Option<&GraphSample> = None;
            for s in &samples {
                let g = (s.fx - fx).abs();
                if g > gap {
                    gap = g;
                    worst = Some(s);
                }
            }
            if gap < best_gap {
                best_gap = gap;
                best_witness = worst.cloned();
            }
            if gap < eps {
                chosen = Some(delta);
                break;
            }
        }
        let slack = eps - best_gap;
        let witness_sample = best_witness;
        acc.push(slack, || {
            let mut inputs = witness_inputs(&[("eps", json_num(eps))]);
            if let Some(s) = &witness_sample {
                inputs.insert("x".into(), json_vec(&s.x));
                inputs.insert("x_star".into(), json_vec(&s.xstar));
                inputs.insert("value".into(), json_num(s.fx));
            }
            Witness { inputs, lhs: eps, rhs: best_gap, slack }
        });
        match chosen {
            Some(delta) => acc.param(&format!("delta[eps={eps}]"), json_num(delta)),
            None => acc.param(&format!("delta[eps={eps}]"), Value::Null),
        }
    }
    acc.param("delta_grid", Value::Array(delta_grid.iter().map(|d| json_num(*d)).collect()));
    acc.note("graph samples are not sublevel-filtered for this check");
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::gallery;

    fn plan1(grid: usize, half: f64) -> SamplePlan {
        SamplePlan::centered(7, grid, 16, &[0.0], half).unwrap()
    }

    #[test]
    fn regular_subgradient_accepts_convex_slope_inside_interval() {
        let phi = gallery::abs_model();
        let plan = plan1(33, 1.0);
        let r = regular_subgradient_check(&phi, &[0.0], &[0.5], 0.5, &plan).unwrap();
        assert!(r.is_certified(), "margin {:?}", r.margin);
    }

    #[test]
    fn regular_subgradient_rejects_slope_outside_interval() {
        let phi = gallery::abs_model();
        let plan = plan1(33, 1.0);
        let r = regular_subgradient_check(&phi, &[0.0], &[2.0], 0.5, &plan).unwrap();
        assert!(!r.is_certified());
        // quotient tends to -1 on the positive side; worst slack occurs at the
        // smallest scale where the allowance is 8 * 0.5/16 = 0.25.
        assert!((r.margin.unwrap() + 0.75).abs() < 1e-9, "margin {:?}", r.margin);
    }

    #[test]
    fn regular_subgradient_accepts_gradient_of_smooth_concave_model() {
        let phi = gallery::quadratic(-2.0, 1);
        let plan = plan1(33, 1.0);
        let r = regular_subgradient_check(&phi, &[1.0], &[-2.0], 0.5, &plan).unwrap();
        assert!(r.is_certified(), "margin {:?}", r.margin);
    }

    #[test]
    fn proximal_subgradient_modulus_zero_on_convex_model() {
        let phi = gallery::abs_model();
        let plan = plan1(33, 2.0);
        let r = proximal_subgradient_check(&phi, &[0.0], &[0.5], &plan).unwrap();
        assert!(r.is_certified());
        assert_eq!(r.params["r"], Value::from(0.0));
    }

    #[test]
    fn proximal_subgradient_fits_curvature_of_concave_square() {
        let phi = gallery::quadratic(-2.0, 1);
        let plan = plan1(33, 2.0);
        let r = proximal_subgradient_check(&phi, &[0.0], &[0.0], &plan).unwrap();
        assert!(r.is_certified());
        assert_eq!(r.params["r"], Value::from(2.0));
    }

    #[test]
    fn proximal_subgradient_zero_modulus_on_indicator_step() {
        let phi = gallery::zero_one();
        let plan = plan1(33, 2.0);
        let r = proximal_subgradient_check(&phi, &[0.0], &[0.0], &plan).unwrap();
        assert!(r.is_certified());
        assert_eq!(r.params["r"], Value::from(0.0));
    }

    #[test]
    fn proximal_subgradient_rejects_slope_outside_interval() {
        let phi = gallery::abs_model();
        let plan = plan1(33, 2.0);
        let r = proximal_subgradient_check(&phi, &[0.0], &[2.0], &plan).unwrap();
        assert!(!r.is_certified());
        assert_eq!(r.params["r"], Value::Null);
    }

    #[test]
    fn prox_regularity_of_step_and_smooth_models() {
        let m = NormModel::euclidean(1);
        let plan = plan1(65, 0.5);
        let w = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 0.5).unwrap();
        let step = gallery::zero_one();
        let r = prox_regularity_certify(&step, &[0.0], &[0.0], &w, &m, &plan).unwrap();
        assert!(r.is_certified(), "margin {:?}", r.margin);
        assert_eq!(r.params["r"], Value::from(0.0));

        let quad = gallery::quadratic(1.0, 1);
        let w2 = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 1.0).unwrap();
        let r2 = prox_regularity_certify(&quad, &[0.0], &[0.0], &w2, &m, &plan).unwrap();
        assert!(r2.is_certified());
        assert_eq!(r2.params["r"], Value::from(0.0));
    }

    #[test]
    fn prox_regularity_refuted_on_staircase_at_origin() {
        let m = NormModel::euclidean(1);
        let phi = gallery::staircase();
        let plan = SamplePlan::centered(7, 641, 32, &[0.0], 0.2).unwrap();
        let w = Window::new(vec![0.0], vec![0.0], 0.2, 0.2, 0.1).unwrap();
        let r = prox_regularity_certify(&phi, &[0.0], &[0.0], &w, &m, &plan).unwrap();
        assert!(!r.is_certified());
        assert_eq!(r.params["r"], Value::Null);
    }

    #[test]
    fn subdiff_continuity_separates_staircase_from_step() {
        let m = NormModel::euclidean(1);
        let plan = plan1(65, 1.0);
        let grid = [0.1, 0.05, 0.01, 0.005, 0.001];
        let stair = gallery::staircase();
        let r = subdiff_continuity_check(&stair, &[0.0], &[0.0], &grid, &m, &plan).unwrap();
        assert!(r.is_certified(), "margin {:?}", r.margin);

        let step = gallery::zero_one();
        let r2 = subdiff_continuity_check(&step, &[0.0], &[0.0], &grid, &m, &plan).unwrap();
        assert!(!r2.is_certified());
        assert!(r2.margin.unwrap() <= -0.9);

        let quad = gallery::quadratic(1.0, 1);
        let r3 = subdiff_continuity_check(&quad, &[0.0], &[0.0], &grid, &m, &plan).unwrap();
        assert!(r3.is_certified());
    }

    #[test]
    fn proximal_implies_regular_on_shared_pair() {
        let phi = gallery::abs_model();
        let plan = plan1(33, 1.0);
        let prox = proximal_subgradient_check(&phi, &[0.0], &[-1.0], &plan).unwrap();
        let reg = regular_subgradient_check(&phi, &[0.0], &[-1.0], 0.5, &plan).unwrap();
        assert!(prox.is_certified());
        assert!(reg.is_certified());
    }

    #[test]
    fn rejects_base_point_outside_domain() {
        let phi = gallery::staircase();
        let plan = plan1(33, 0.5);
        assert!(regular_subgradient_check(&phi, &[2.0], &[0.0], 0.5, &plan).is_err());
        assert!(proximal_subgradient_check(&phi, &[2.0], &[0.0], &plan).is_err());
    }
}
