//! Variational convexity certifiers: localized lower-tangent inequalities
//! with a Lyapunov quadratic term, modulus search, tangent-hull
//! reconstruction with graph agreement, quadratic shift transfer, and
//! strong-convexity scans (secant and midpoint forms) that admit non-smooth
//! norms and Moreau envelopes.

use crate::envelope::{moreau_envelope, quadratically_shifted, tilted_envelope};
use crate::error::{check_dim, Error, Result};
use crate::models::{graph_samples, FunctionModel, GraphSample, SubdiffSet, Window};
use crate::norm_space::{dot, NormEval, NormModel};
use crate::plan::{ball_points, SamplePlan};
use crate::report::{json_num, json_vec, witness_inputs, CertificateReport, SlackAccumulator, Witness};
use crate::tol;
use serde_json::Value;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Upper end of the modulus bisection in [`sigma_search`].
pub const SIGMA_MAX: f64 = 64.0;
/// Resolution of the modulus bisection.
pub const SIGMA_RESOLUTION: f64 = 1e-3;
/// Tolerance for envelope-modulus comparisons (slack measured in modulus
/// units, i.e. normalized by the squared pair distance).
pub const MODULUS_TOL: f64 = 1e-4;

pub(crate) fn require_on_graph(phi: &FunctionModel, x: &[f64], xstar: &[f64]) -> Result<()> {
    check_dim(phi.n, x)?;
    check_dim(phi.n, xstar)?;
    if !phi.eval(x).is_finite() {
        return Err(Error::input("base point lies outside the domain (infinite value)"));
    }
    if phi.has_subdiff() && !phi.subdiff(x)?.contains(xstar, tol::CERT_TOL) {
        return Err(Error::input(
            "covector is not in the subdifferential at the base point",
        ));
    }
    Ok(())
}

/// The sampled material a variational-convexity scan runs over: localized
/// graph points and comparison points in the window's x-ball (ball samples
/// plus the graph points' own x's).
pub(crate) struct VcScan {
    pub(crate) samples: Vec<GraphSample>,
    pub(crate) xs: Vec<Vec<f64>>,
}

pub(crate) fn vc_scan(
    phi: &FunctionModel,
    w: &Window,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<VcScan> {
    let samples = graph_samples(phi, w, plan, m)?;
    let mut xs = Vec::new();
    for x in ball_points(plan, &w.center_x, w.r1)? {
        if w.contains_x(m, &x)? {
            xs.push(x);
        }
    }
    for s in &samples {
        xs.push(s.x.clone());
    }
    Ok(VcScan { samples, xs })
}

/// Which quadratic the lower-tangent inequality carries: the norm's Lyapunov
/// functional (variational convexity) or the plain squared distance
/// (second-order growth). They coincide when p = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum QuadTerm {
    Lyapunov,
    SquaredDistance,
}

/// One lower-tangent slack: phi(x) - phi(u) - <u*, x-u> - (sigma/2) Q(u, x)
/// with Q per [`QuadTerm`]. +inf at x satisfies the inequality trivially
/// (None).
pub(crate) fn vc_slack(
    phi: &FunctionModel,
    u: &GraphSample,
    x: &[f64],
    sigma: f64,
    m: &NormModel,
    quad: QuadTerm,
) -> Result<Option<(f64, f64, f64)>> {
    let fx = phi.eval(x);
    if !fx.is_finite() {
        return Ok(None);
    }
    let d: Vec<f64> = x.iter().zip(&u.x).map(|(a, b)| a - b).collect();
    let q = match quad {
        QuadTerm::Lyapunov => m.lyapunov(&u.x, x)?,
        QuadTerm::SquaredDistance => {
            let dist = m.dist(&u.x, x)?;
            dist * dist
        }
    };
    let rhs = u.fx + dot(&u.xstar, &d) + 0.5 * sigma * q;
    Ok(Some((fx, rhs, fx - rhs)))
}

/// Certifies variational convexity with modulus `sigma` at `(xbar,
/// xbar_star)` relative to the window: every localized graph sample `(u, u*)`
/// must minorize the function on sampled window points,
///
/// ```text
/// phi(x) >= phi(u) + <u*, x - u> + (sigma/2) L(u, x),
/// ```
///
/// where `L(u, x) = ||u||^2 - 2 <J u, x> + ||x||^2` reduces to
/// `||x - u||^2` in the inner-product case. sigma = 0 is plain variational
/// convexity. An empty localized sample set certifies vacuously and the
/// report is flagged.
pub fn certify_variational_convexity(
    phi: &FunctionModel,
    xbar: &[f64],
    xbar_star: &[f64],
    sigma: f64,
    w: &Window,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::input("sigma must be finite and nonnegative"));
    }
    require_on_graph(phi, xbar, xbar_star)?;
    let scan = vc_scan(phi, w, m, plan)?;
    let mut acc = SlackAccumulator::new("variational_convexity", tol::CERT_TOL);
    for u in &scan.samples {
        for x in &scan.xs {
            if let Some((lhs, rhs, slack)) = vc_slack(phi, u, x, sigma, m, QuadTerm::Lyapunov)? {
                acc.push(slack, || Witness {
                    inputs: witness_inputs(&[
                        ("u", json_vec(&u.x)),
                        ("u_star", json_vec(&u.xstar)),
                        ("x", json_vec(x)),
                    ]),
                    lhs,
                    rhs,
                    slack,
                });
            }
        }
    }
    acc.param("sigma", json_num(sigma));
    acc.param("window", serde_json::to_value(w).expect("window serializes"));
    acc.param("graph_samples", Value::from(scan.samples.len() as u64));
    acc.param("comparison_points", Value::from(scan.xs.len() as u64));
    Ok(acc.finish())
}

/// Largest modulus in [0, SIGMA_MAX] (to SIGMA_RESOLUTION) at which the
/// variational-convexity scan certifies on this window's samples; None when
/// even sigma = 0 refutes. A vacuous window certifies every sigma and
/// returns SIGMA_MAX — read alongside the vacuous flag of a direct run.
pub fn sigma_search(
    phi: &FunctionModel,
    xbar: &[f64],
    xbar_star: &[f64],
    w: &Window,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<Option<f64>> {
    require_on_graph(phi, xbar, xbar_star)?;
    let scan = vc_scan(phi, w, m, plan)?;
    let margin = |sigma: f64| -> Result<f64> {
        let mut worst = f64::INFINITY;
        for u in &scan.samples {
            for x in &scan.xs {
                if let Some((_, _, slack)) = vc_slack(phi, u, x, sigma, m, QuadTerm::Lyapunov)? {
                    worst = worst.min(slack);
                }
            }
        }
        Ok(worst)
    };
    let ok = |v: f64| v >= -tol::CERT_TOL;
    if !ok(margin(0.0)?) {
        return Ok(None);
    }
    if ok(margin(SIGMA_MAX)?) {
        return Ok(Some(SIGMA_MAX));
    }
    let (mut lo, mut hi) = (0.0f64, SIGMA_MAX);
    while hi - lo > SIGMA_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if ok(margin(mid)?) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Reconstructs the finite lower hull of the sampled tangents with a
/// sigma-quadratic:
///
/// ```text
/// hull(x) = max_i [ phi(u_i) + <u_i*, x - u_i>
///                   + (sigma/2)(||u_i||^2 - 2 <J u_i, x>) ] + (sigma/2)||x||^2,
/// ```
///
/// a finite max of affine pieces plus a fixed norm-quadratic. The model's
/// subdifferential is exact: the hull of the active pieces' slopes shifted by
/// `sigma J(x)`.
pub fn build_hull_function(
    samples: &[GraphSample],
    sigma: f64,
    m: &NormModel,
) -> Result<FunctionModel> {
    if samples.is_empty() {
        return Err(Error::input("hull construction needs at least one graph sample"));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::input("sigma must be finite and nonnegative"));
    }
    let n = m.n;
    let mut slopes: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
    let mut offsets: Vec<f64> = Vec::with_capacity(samples.len());
    for s in samples {
        check_dim(n, &s.x)?;
        check_dim(n, &s.xstar)?;
        let j = m.duality_map(&s.x)?;
        slopes.push(s.xstar.iter().zip(&j).map(|(v, ji)| v - sigma * ji).collect());
        offsets.push(s.fx - dot(&s.xstar, &s.x) + 0.5 * sigma * m.norm_sq(&s.x)?);
    }
    let slopes = Arc::new(slopes);
    let offsets = Arc::new(offsets);

    let eval = {
        let slopes = slopes.clone();
        let offsets = offsets.clone();
        let m = m.clone();
        Arc::new(move |x: &[f64]| {
            let affine = slopes
                .iter()
                .zip(offsets.iter())
                .map(|(a, b)| dot(a, x) + b)
                .fold(f64::NEG_INFINITY, f64::max);
            affine + 0.5 * sigma * m.norm_sq(x).expect("dimension fixed at construction")
        })
    };
    let subdiff = {
        let slopes = slopes.clone();
        let offsets = offsets.clone();
        let m = m.clone();
        Arc::new(move |x: &[f64]| {
            let values: Vec<f64> = slopes
                .iter()
                .zip(offsets.iter())
                .map(|(a, b)| dot(a, x) + b)
                .collect();
            let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let act_tol = 1e-12 * (1.0 + vmax.abs());
            let jx = m.duality_map(x).expect("dimension fixed at construction");
            let active: Vec<Vec<f64>> = values
                .iter()
                .zip(slopes.iter())
                .filter(|(v, _)| **v >= vmax - act_tol)
                .map(|(_, a)| a.iter().zip(&jx).map(|(ai, ji)| ai + sigma * ji).collect())
                .collect();
            if x.len() == 1 {
                let lo = active.iter().map(|g| g[0]).fold(f64::INFINITY, f64::min);
                let hi = active.iter().map(|g| g[0]).fold(f64::NEG_INFINITY, f64::max);
                SubdiffSet::interval(lo, hi)
            } else if active.len() == 1 {
                SubdiffSet::Point(active.into_iter().next().unwrap())
            } else {
                SubdiffSet::Hull(active)
            }
        })
    };
    let mut out = FunctionModel::new(
        format!("hull({} tangents, sigma={sigma})", samples.len()),
        n,
        eval,
    )
    .with_subdiff(subdiff);
    out.meta.is_convex = true;
    Ok(out)
}

/// Two-directional agreement between a function's localized subdifferential
/// graph and a reconstructed hull:
///
/// * forward — every localized graph sample `(x, x*)` of `phi` must satisfy
///   `hull(x) = phi(x)` and `x* in subdiff hull(x)` within tolerance;
/// * converse — every hull graph point `(x, v)` with `x` in the window ball,
///   `v` in the dual ball, and `hull(x) = phi(x)` within tolerance must
///   satisfy `v in subdiff phi(x)`.
///
/// Samples whose value sits within tolerance of the sublevel boundary
/// `phi(center) + eps` are indeterminate and skipped (counted in params).
pub fn verify_graph_agreement(
    phi: &FunctionModel,
    hull: &FunctionModel,
    w: &Window,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    let f_center = phi.eval_checked(&w.center_x)?;
    if !f_center.is_finite() {
        return Err(Error::input("window center lies outside the domain"));
    }
    let cutoff = f_center + w.eps;
    let samples = graph_samples(phi, w, plan, m)?;
    let mut acc = SlackAccumulator::new("graph_agreement", tol::CERT_TOL);
    let mut boundary_skipped = 0usize;
    let mut forward = 0usize;
    for s in &samples {
        if s.fx > cutoff - tol::CERT_TOL {
            boundary_skipped += 1;
            continue;
        }
        forward += 1;
        let hv = hull.eval(&s.x);
        let value_slack = -(hv - s.fx).abs();
        acc.push(value_slack, || Witness {
            inputs: witness_inputs(&[
                ("direction", Value::String("value_forward".into())),
                ("x", json_vec(&s.x)),
            ]),
            lhs: hv,
            rhs: s.fx,
            slack: value_slack,
        });
        let dist = hull.subdiff(&s.x)?.distance_to(&s.xstar);
        acc.push(-dist, || Witness {
            inputs: witness_inputs(&[
                ("direction", Value::String("subgradient_forward".into())),
                ("x", json_vec(&s.x)),
                ("x_star", json_vec(&s.xstar)),
            ]),
            lhs: 0.0,
            rhs: dist,
            slack: -dist,
        });
    }
    // Converse: hull graph points that touch phi must be phi-subgradients.
    // Tolerance contact blurs near kinks: at x within ~1e-12 of a kink every
    // hull piece looks active, so the hull subdifferential widens to the full
    // slope interval while phi's stays a one-sided branch. Contact points are
    // therefore clustered and the containment is tested at each cluster's
    // sharpest representative (smallest |hull - phi|), where it is exact.
    let clamp = if phi.n == 1 {
        Some((w.center_xstar[0], w.r2 / m.dual_norm(&[1.0])?))
    } else {
        None
    };
    let mut contacts: Vec<(f64, Vec<f64>)> = Vec::new();
    for x in ball_points(plan, &w.center_x, w.r1)? {
        if !w.contains_x(m, &x)? {
            continue;
        }
        let fv = phi.eval(&x);
        if !fv.is_finite() {
            continue;
        }
        let diff = (hull.eval(&x) - fv).abs();
        if diff <= tol::CERT_TOL {
            contacts.push((diff, x));
        }
    }
    contacts.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            for (p, q) in a.1.iter().zip(&b.1) {
                let ord = p.total_cmp(q);
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for (_, x) in contacts {
        let clustered = reps.iter().any(|r| {
            r.iter()
                .zip(&x)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
                <= tol::CLUSTER_SINGLE
        });
        if !clustered {
            reps.push(x);
        }
    }
    let mut converse = 0usize;
    for x in &reps {
        for v in hull.subdiff(x)?.enumerate(clamp) {
            if !w.contains_xstar(m, &v)? {
                continue;
            }
            converse += 1;
            let dist = phi.subdiff(x)?.distance_to(&v);
            acc.push(-dist, || Witness {
                inputs: witness_inputs(&[
                    ("direction", Value::String("subgradient_converse".into())),
                    ("x", json_vec(x)),
                    ("v", json_vec(&v)),
                ]),
                lhs: 0.0,
                rhs: dist,
                slack: -dist,
            });
        }
    }
    acc.note(
        "converse contact points are clustered; containment is tested at each \
         cluster's closest-contact representative",
    );
    acc.param("forward_samples", Value::from(forward as u64));
    acc.param("converse_samples", Value::from(converse as u64));
    acc.param("boundary_skipped", Value::from(boundary_skipped as u64));
    acc.param("window", serde_json::to_value(w).expect("window serializes"));
    if boundary_skipped > 0 {
        acc.note(format!(
            "{boundary_skipped} sample(s) within tolerance of the sublevel boundary \
             were skipped as indeterminate"
        ));
    }
    Ok(acc.finish())
}

/// Paired verdicts of the quadratic shift transfer.
#[derive(Debug)]
pub struct ShiftTransfer {
    /// Variational convexity of phi with modulus sigma.
    pub primal: CertificateReport,
    /// Plain variational convexity of phi - (sigma/2)||.||^2 at the sheared
    /// center (xbar, xbar_star - sigma J(xbar)).
    pub sheared: CertificateReport,
    /// Whether the two verdicts agree.
    pub agree: bool,
}

/// Runs the variational-convexity scan on `phi` with modulus sigma and on the
/// quadratically shifted model with modulus 0 at the sheared center, and
/// compares verdicts. The two inequalities are algebraically equivalent
/// pointwise, so disagreement indicates a sampling artifact (the shifted
/// model's sublevel filter differs slightly) and is flagged.
pub fn quadratic_shift_transfer(
    phi: &FunctionModel,
    sigma: f64,
    xbar: &[f64],
    xbar_star: &[f64],
    w: &Window,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<ShiftTransfer> {
    let primal = certify_variational_convexity(phi, xbar, xbar_star, sigma, w, m, plan)?;
    let psi = quadratically_shifted(phi, sigma, m);
    let j = m.duality_map(xbar)?;
    let sheared_star: Vec<f64> = xbar_star.iter().zip(&j).map(|(v, ji)| v - sigma * ji).collect();
    let sheared_w = Window::new(
        w.center_x.clone(),
        sheared_star.clone(),
        w.r1,
        w.r2,
        w.eps,
    )?;
    let mut sheared =
        certify_variational_convexity(&psi, xbar, &sheared_star, 0.0, &sheared_w, m, plan)?;
    let agree = primal.verdict == sheared.verdict;
    if !agree {
        sheared
            .notes
            .push("verdict disagrees with the unshifted run; see the paired report".into());
    }
    Ok(ShiftTransfer { primal, sheared, agree })
}

/// Convex-combination weights used by the secant strong-convexity scan.
const LAMBDA_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn norm_label(ne: &NormEval) -> String {
    match ne {
        NormEval::Lp(m) => format!("lp(p={}, n={})", m.p, m.n),
        NormEval::WeightedL1 { weights } => format!("weighted_l1(n={})", weights.len()),
    }
}

/// Secant (three-point) strong-convexity scan in an arbitrary norm: for
/// sampled pairs `(x, y)` and weights `lam`,
///
/// ```text
/// lam phi(x) + (1-lam) phi(y)
///   >= phi(lam x + (1-lam) y) + (sigma/2) lam (1-lam) ||x - y||^2 - tol.
/// ```
///
/// Pairs with an infinite endpoint hold trivially and are skipped; an
/// infinite value at the combination refutes with slack -inf.
pub fn polyak_strong_convexity_check(
    phi: &FunctionModel,
    sigma: f64,
    ne: &NormEval,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::input("sigma must be finite and nonnegative"));
    }
    if ne.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: ne.dim() });
    }
    if plan.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: plan.dim() });
    }
    let pts = plan.points()?;
    let mut acc = SlackAccumulator::new("polyak_strong_convexity", tol::CERT_TOL);
    let mut triples = 0usize;
    for (i, j) in plan.pair_indices(pts.len()) {
        let (x, y) = (&pts[i], &pts[j]);
        let fx = phi.eval(x);
        let fy = phi.eval(y);
        if !(fx.is_finite() && fy.is_finite()) {
            continue;
        }
        let dxy = ne.dist(x, y)?;
        for &lam in &LAMBDA_GRID {
            let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
            let fz = phi.eval(&z);
            let lhs = lam * fx + (1.0 - lam) * fy;
            let rhs = fz + 0.5 * sigma * lam * (1.0 - lam) * dxy * dxy;
            triples += 1;
            acc.push(lhs - rhs, || Witness {
                inputs: witness_inputs(&[
                    ("x", json_vec(x)),
                    ("y", json_vec(y)),
                    ("lambda", json_num(lam)),
                ]),
                lhs,
                rhs,
                slack: lhs - rhs,
            });
        }
    }
    acc.param("sigma", json_num(sigma));
    acc.param("norm", Value::String(norm_label(ne)));
    acc.param("triples", Value::from(triples as u64));
    Ok(acc.finish())
}

/// Midpoint convexity scan of the shifted function
/// `psi = phi - (sigma/2)||.||^2` in an arbitrary norm:
///
/// ```text
/// (psi(x) + psi(y))/2 >= psi((x + y)/2) - tol
/// ```
///
/// over sampled pairs plus the model's declared stress pairs. In a
/// non-inner-product norm this is NOT equivalent to the secant scan of
/// [`polyak_strong_convexity_check`]; the pair of checks separates the two
/// strong-convexity notions.
pub fn shift_strong_convexity_check(
    phi: &FunctionModel,
    sigma: f64,
    ne: &NormEval,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::input("sigma must be finite and nonnegative"));
    }
    if ne.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: ne.dim() });
    }
    if plan.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: plan.dim() });
    }
    let psi = |x: &[f64]| -> Result<f64> {
        let f = phi.eval(x);
        if !f.is_finite() {
            return Ok(f);
        }
        let nx = ne.norm(x)?;
        Ok(f - 0.5 * sigma * nx * nx)
    };
    let pts = plan.points()?;
    let mut acc = SlackAccumulator::new("shift_strong_convexity", tol::CERT_TOL);
    let handle = |x: &[f64], y: &[f64], acc: &mut SlackAccumulator| -> Result<()> {
        let px = psi(x)?;
        let py = psi(y)?;
        if !(px.is_finite() && py.is_finite()) {
            return Ok(());
        }
        let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        let pm = psi(&mid)?;
        let lhs = 0.5 * (px + py);
        let slack = lhs - pm;
        acc.push(slack, || Witness {
            inputs: witness_inputs(&[
                ("x", json_vec(x)),
                ("y", json_vec(y)),
                ("lambda", json_num(0.5)),
            ]),
            lhs,
            rhs: pm,
            slack,
        });
        Ok(())
    };
    for (i, j) in plan.pair_indices(pts.len()) {
        handle(&pts[i], &pts[j], &mut acc)?;
    }
    let mut stress_used = 0usize;
    for (u, v) in &phi.meta.stress_pairs {
        if u.len() == phi.n && v.len() == phi.n {
            handle(u, v, &mut acc)?;
            stress_used += 1;
        }
    }
    acc.param("sigma", json_num(sigma));
    acc.param("norm", Value::String(norm_label(ne)));
    acc.param("stress_pairs", Value::from(stress_used as u64));
    Ok(acc.finish())
}

/// Bit-exact cache key for repeated envelope evaluations.
fn bits_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Certifies strong midpoint convexity (modulus `sigma / (1 + sigma
/// lambda)`) of the tilted envelope `x -> e_lambda(phi - <xbar_star, .>)(x)`
/// on pairs around `xbar`, for each lambda in the list. In the inner-product
/// case the untilted envelope around the translated center
/// `xbar + lambda J^-1(xbar_star)` is scanned as well and the per-lambda
/// verdicts must agree (the two forms differ by an affine function there).
/// Slacks are normalized to modulus units: `8 * midpoint-gap / ||x-y||^2 -
/// sigma_lambda`, so the tolerance reads directly as a modulus error.
pub fn certify_envelope_convexity(
    phi: &FunctionModel,
    xbar: &[f64],
    xbar_star: &[f64],
    lambda_list: &[f64],
    sigma: f64,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    check_dim(phi.n, xbar)?;
    check_dim(phi.n, xbar_star)?;
    if plan.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: plan.dim() });
    }
    if lambda_list.is_empty() || lambda_list.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::input("lambda list must be nonempty with positive finite entries"));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::input("sigma must be finite and nonnegative"));
    }
    let hilbert = m.p == 2.0;
    if sigma > 0.0 && !hilbert {
        return Err(Error::capability(
            "the envelope modulus formula sigma/(1 + sigma lambda) requires an \
             inner-product norm (p = 2)",
        ));
    }
    let pts = plan.points()?;
    let h = plan
        .box_lo
        .iter()
        .zip(&plan.box_hi)
        .map(|(lo, hi)| 0.5 * (hi - lo))
        .fold(0.0f64, f64::max);
    let min_sep = 0.2 * h;
    let pairs: Vec<(usize, usize)> = plan
        .pair_indices(pts.len())
        .into_iter()
        .filter(|(i, j)| {
            m.dist(&pts[*i], &pts[*j]).map(|d| d >= min_sep).unwrap_or(false)
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::input(
            "no sample pairs are separated enough for a modulus measurement; \
             enlarge the plan grid",
        ));
    }

    let mut acc = SlackAccumulator::new("envelope_convexity", MODULUS_TOL);
    for &lam in lambda_list {
        let sig_lam = sigma / (1.0 + sigma * lam);
        // forms: tilted scan around xbar; inner-product case adds the
        // untilted scan around the translated center.
        let mut forms: Vec<(&'static str, Vec<f64>)> = vec![("tilted", vec![0.0; phi.n])];
        if hilbert {
            let jinv = m.inverse_duality_map(xbar_star)?;
            forms.push(("untilted", jinv.iter().map(|v| lam * v).collect()));
        }
        let mut verdicts: Vec<(&'static str, bool, f64)> = Vec::new();
        for (label, offset) in &forms {
            let label = *label;
            let tilted_form = label == "tilted";
            let mut cache: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
            let mut env = |x: &[f64]| -> Result<f64> {
                if let Some(v) = cache.get(&bits_key(x)) {
                    return Ok(*v);
                }
                let shifted: Vec<f64> = x.iter().zip(offset).map(|(a, b)| a + b).collect();
                let search = SamplePlan::centered(
                    plan.seed,
                    plan.grid_per_axis,
                    plan.qmc_points,
                    &shifted,
                    4.0 * h,
                )?;
                let r = if tilted_form {
                    tilted_envelope(phi, lam, xbar_star, x, m, &search)?
                } else {
                    moreau_envelope(phi, lam, &shifted, m, &search)?
                };
                cache.insert(bits_key(x), r.value);
                Ok(r.value)
            };
            let mut min_measured = f64::INFINITY;
            let mut form_margin = f64::INFINITY;
            for &(i, j) in &pairs {
                let (x, y) = (&pts[i], &pts[j]);
                let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
                let gx = env(x)?;
                let gy = env(y)?;
                let gm = env(&mid)?;
                let d = m.dist(x, y)?;
                let slack = if gx.is_finite() && gy.is_finite() && gm.is_finite() {
                    let measured = 8.0 * (0.5 * (gx + gy) - gm) / (d * d);
                    min_measured = min_measured.min(measured);
                    measured - sig_lam
                } else {
                    f64::NEG_INFINITY
                };
                form_margin = form_margin.min(slack);
                acc.push(slack, || Witness {
                    inputs: witness_inputs(&[
                        ("form", Value::String(label.into())),
                        ("lambda", json_num(lam)),
                        ("x", json_vec(x)),
                        ("y", json_vec(y)),
                    ]),
                    lhs: slack + sig_lam,
                    rhs: sig_lam,
                    slack,
                });
            }
            acc.param(
                &format!("measured_modulus[lambda={lam}][{label}]"),
                json_num(min_measured),
            );
            verdicts.push((label, form_margin >= -MODULUS_TOL, form_margin));
        }
        if verdicts.len() == 2 && verdicts[0].1 != verdicts[1].1 {
            acc.note(format!(
                "tilted/untilted verdicts disagree at lambda={lam} \
                 (margins {:.3e} vs {:.3e})",
                verdicts[0].2, verdicts[1].2
            ));
        }
        acc.param(&format!("target_modulus[lambda={lam}]"), json_num(sig_lam));
    }
    acc.param("sigma", json_num(sigma));
    acc.param(
        "lambda_list",
        Value::Array(lambda_list.iter().map(|l| json_num(*l)).collect()),
    );
    if !hilbert {
        acc.note("non-inner-product norm: only the tilted form was scanned");
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::gallery;

    fn euclid1() -> NormModel {
        NormModel::euclidean(1)
    }

    fn window0(r: f64, eps: f64) -> Window {
        Window::new(vec![0.0], vec![0.0], r, r, eps).unwrap()
    }

    fn plan0(grid: usize, half: f64) -> SamplePlan {
        SamplePlan::centered(11, grid, 8, &[0.0], half).unwrap()
    }

    #[test]
    fn quadratic_is_variationally_convex_exactly_up_to_its_curvature() {
        let phi = gallery::quadratic(1.0, 1);
        let m = euclid1();
        let w = window0(1.0, 1.0);
        let plan = plan0(33, 1.0);
        let at1 = certify_variational_convexity(&phi, &[0.0], &[0.0], 1.0, &w, &m, &plan).unwrap();
        assert!(at1.is_certified(), "margin {:?}", at1.margin);
        assert!(at1.margin.unwrap() >= -1e-12);
        let above =
            certify_variational_convexity(&phi, &[0.0], &[0.0], 1.5, &w, &m, &plan).unwrap();
        assert!(!above.is_certified());
    }

    #[test]
    fn step_model_is_strongly_variationally_convex_at_origin() {
        let phi = gallery::zero_one();
        let m = euclid1();
        let w = window0(0.5, 0.5);
        let plan = plan0(33, 0.5);
        let r = certify_variational_convexity(&phi, &[0.0], &[0.0], 1.0, &w, &m, &plan).unwrap();
        assert!(r.is_certified(), "margin {:?}", r.margin);
        assert!(!r.vacuous);
    }

    #[test]
    fn concave_square_refutes_variational_convexity() {
        let phi = gallery::quadratic(-2.0, 1);
        let m = euclid1();
        let w = Window::new(vec![0.0], vec![0.0], 1.0, 3.0, 1.0).unwrap();
        let plan = plan0(33, 1.0);
        let r = certify_variational_convexity(&phi, &[0.0], &[0.0], 0.0, &w, &m, &plan).unwrap();
        assert!(!r.is_certified());
    }

    #[test]
    fn sigma_search_recovers_quadratic_curvature() {
        let phi = gallery::quadratic(1.0, 1);
        let m = euclid1();
        let w = window0(1.0, 1.0);
        let plan = plan0(17, 1.0);
        let found = sigma_search(&phi, &[0.0], &[0.0], &w, &m, &plan).unwrap().unwrap();
        assert!((found - 1.0).abs() <= 2e-3, "found {found}");
        let concave = gallery::quadratic(-2.0, 1);
        let w2 = Window::new(vec![0.0], vec![0.0], 1.0, 3.0, 1.0).unwrap();
        assert!(sigma_search(&concave, &[0.0], &[0.0], &w2, &m, &plan).unwrap().is_none());
    }

    #[test]
    fn hull_of_quadratic_tangents_reproduces_the_quadratic() {
        let phi = gallery::quadratic(1.0, 1);
        let m = euclid1();
        let w = window0(1.0, 1.0);
        let plan = plan0(17, 1.0);
        let samples = graph_samples(&phi, &w, &plan, &m).unwrap();
        let hull = build_hull_function(&samples, 1.0, &m).unwrap();
        for t in [-0.9, -0.3, 0.0, 0.4, 0.8] {
            assert!((hull.eval(&[t]) - 0.5 * t * t).abs() < 1e-12, "t={t}");
        }
        let agree = verify_graph_agreement(&phi, &hull, &w, &m, &plan).unwrap();
        assert!(agree.is_certified(), "margin {:?}", agree.margin);
    }

    #[test]
    fn hull_minorizes_the_kink_and_agrees_on_its_graph() {
        let phi = gallery::abs_model();
        let m = euclid1();
        let w = Window::new(vec![0.0], vec![0.0], 0.8, 0.9, 1.0).unwrap();
        let plan = plan0(33, 0.8);
        let samples = graph_samples(&phi, &w, &plan, &m).unwrap();
        let hull = build_hull_function(&samples, 0.0, &m).unwrap();
        for t in crate::plan::linspace(-0.8, 0.8, 101) {
            assert!(hull.eval(&[t]) <= t.abs() + 1e-9, "hull must minorize at t={t}");
        }
        let agree = verify_graph_agreement(&phi, &hull, &w, &m, &plan).unwrap();
        assert!(agree.is_certified(), "margin {:?}", agree.margin);
    }

    #[test]
    fn hull_rejects_empty_sample_sets() {
        assert!(build_hull_function(&[], 1.0, &euclid1()).is_err());
    }

    #[test]
    fn shift_transfer_agreement_on_three_models() {
        let m = euclid1();
        let plan = plan0(33, 1.0);

        let quad = gallery::quadratic(2.0, 1);
        let w = window0(1.0, 1.0);
        let t = quadratic_shift_transfer(&quad, 2.0, &[0.0], &[0.0], &w, &m, &plan).unwrap();
        assert!(t.agree && t.primal.is_certified() && t.sheared.is_certified());

        let kink = gallery::abs_model();
        let wk = Window::new(vec![0.0], vec![0.0], 0.8, 1.1, 1.0).unwrap();
        let tk = quadratic_shift_transfer(&kink, 1.0, &[0.0], &[0.0], &wk, &m, &plan).unwrap();
        assert!(tk.agree && !tk.primal.is_certified() && !tk.sheared.is_certified());

        let step = gallery::zero_one();
        let ws = window0(0.5, 0.5);
        let plan_s = plan0(33, 0.5);
        let ts = quadratic_shift_transfer(&step, 1.0, &[0.0], &[0.0], &ws, &m, &plan_s).unwrap();
        assert!(ts.agree && ts.primal.is_certified() && ts.sheared.is_certified());
    }

    #[test]
    fn secant_scan_matches_quadratic_curvature() {
        let phi = gallery::quadratic(2.0, 1); // x^2, curvature 2
        let ne = NormEval::lp(euclid1());
        let plan = plan0(17, 1.0);
        let ok = polyak_strong_convexity_check(&phi, 2.0, &ne, &plan).unwrap();
        assert!(ok.is_certified(), "margin {:?}", ok.margin);
        assert!(ok.margin.unwrap() >= -1e-12);
        let too_much = polyak_strong_convexity_check(&phi, 2.5, &ne, &plan).unwrap();
        assert!(!too_much.is_certified());
    }

    #[test]
    fn discretized_integral_model_is_secant_strongly_convex_in_l1() {
        let mdl = gallery::l1_weighted_square(4);
        let ne = NormEval::weighted_l1(vec![0.25; 4]).unwrap();
        let plan = SamplePlan::new(5, 3, 8, vec![-1.0; 4], vec![1.0; 4]).unwrap();
        let r = polyak_strong_convexity_check(&mdl, 2.0, &ne, &plan).unwrap();
        assert!(r.is_certified(), "margin {:?}", r.margin);
        assert!(r.margin.unwrap() >= -1e-12);
    }

    #[test]
    fn shifted_midpoint_scan_refutes_l1_strong_convexity_at_stress_pair() {
        let mdl = gallery::l1_weighted_square(512);
        let ne = NormEval::weighted_l1(vec![1.0 / 512.0; 512]).unwrap();
        let plan = SamplePlan::new(5, 0, 4, vec![-1.0; 512], vec![1.0; 512]).unwrap();
        let r = shift_strong_convexity_check(&mdl, 2.0, &ne, &plan).unwrap();
        assert!(!r.is_certified());
        assert!(r.margin.unwrap() < -4e-3, "margin {:?}", r.margin);
        assert_eq!(r.params["stress_pairs"], Value::from(1u64));
    }

    #[test]
    fn envelope_modulus_of_half_square_family_matches_formula() {
        let phi = gallery::quadratic(1.0, 1);
        let m = euclid1();
        let plan = plan0(9, 1.0);
        let r = certify_envelope_convexity(
            &phi,
            &[0.0],
            &[0.0],
            &[0.1, 0.5, 1.0],
            1.0,
            &m,
            &plan,
        )
        .unwrap();
        assert!(r.is_certified(), "margin {:?}", r.margin);
        for lam in [0.1f64, 0.5, 1.0] {
            let measured = r.params[&format!("measured_modulus[lambda={lam}][tilted]")]
                .as_f64()
                .unwrap();
            let target = 1.0 / (1.0 + lam);
            assert!((measured - target).abs() < 1e-4, "lambda={lam}: {measured} vs {target}");
        }
    }

    #[test]
    fn envelope_of_concave_square_refutes_convexity() {
        let phi = gallery::quadratic(-2.0, 1);
        let m = euclid1();
        let plan = plan0(9, 0.4);
        let r =
            certify_envelope_convexity(&phi, &[0.0], &[0.0], &[0.1], 0.0, &m, &plan).unwrap();
        assert!(!r.is_certified());
    }

    #[test]
    fn envelope_convexity_gates_on_norm_exponent() {
        let phi = gallery::quadratic(1.0, 1);
        let m = NormModel::lp(3.0, 1).unwrap();
        let plan = plan0(9, 1.0);
        let err = certify_envelope_convexity(&phi, &[0.0], &[0.0], &[0.5], 1.0, &m, &plan);
        assert!(err.is_err());
    }
}
