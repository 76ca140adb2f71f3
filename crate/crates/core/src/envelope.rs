//! Moreau envelopes, proximal mappings, tilted variants, the envelope
//! gradient formula, prox-boundedness thresholds, and the inner-product
//! identities (tilt translation and quadratic shift).
//!
//! All values come from the staged derivative-free search in `minimize`,
//! never from closed forms, so the same code path is exercised on smooth,
//! nonsmooth, and extended-real models alike. Closed-form envelopes appear
//! only in tests as independent oracles.

use crate::error::{check_dim, Error, Result};
use crate::minimize::{divergence_probe, staged_min_probed, EnvelopeResult};
use crate::models::FunctionModel;
use crate::norm_space::{dot, NormModel};
use crate::plan::SamplePlan;
use crate::report::{json_num, json_vec, witness_inputs, CertificateReport, SlackAccumulator, Witness};
use serde::Serialize;
use std::sync::Arc;

fn validate_inputs(
    phi: &FunctionModel,
    lambda: f64,
    xstar: &[f64],
    x: &[f64],
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::input(format!("lambda = {lambda} must be a positive real")));
    }
    check_dim(phi.n, x)?;
    check_dim(phi.n, xstar)?;
    if m.n != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: m.n });
    }
    if plan.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: plan.dim() });
    }
    Ok(())
}

/// The tilted proximal objective w -> phi(w) - <xstar, w> + ||w - x||^2 / (2 lambda).
/// Infinite phi values absorb everything (inf-addition).
pub fn tilted_objective<'a>(
    phi: &'a FunctionModel,
    lambda: f64,
    xstar: &'a [f64],
    x: &'a [f64],
    m: &'a NormModel,
) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |w: &[f64]| {
        let fw = phi.eval(w);
        if fw == f64::INFINITY {
            return f64::INFINITY;
        }
        let d: Vec<f64> = w.iter().zip(x).map(|(a, b)| a - b).collect();
        let q = m.norm_sq(&d).expect("dimensions validated upfront");
        fw - dot(xstar, w) + q / (2.0 * lambda)
    }
}

/// Envelope value and minimizer set at x (zero tilt).
pub fn moreau_envelope(
    phi: &FunctionModel,
    lambda: f64,
    x: &[f64],
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<EnvelopeResult> {
    let zero = vec![0.0; phi.n];
    tilted_envelope(phi, lambda, &zero, x, m, plan)
}

/// Same minimization as `moreau_envelope`; the minimizer set is the output.
pub fn proximal_map(
    phi: &FunctionModel,
    lambda: f64,
    x: &[f64],
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<EnvelopeResult> {
    moreau_envelope(phi, lambda, x, m, plan)
}

/// Envelope of phi - <xstar, .>, searched over the plan box with the
/// unboundedness probe attached.
pub fn tilted_envelope(
    phi: &FunctionModel,
    lambda: f64,
    xstar: &[f64],
    x: &[f64],
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<EnvelopeResult> {
    validate_inputs(phi, lambda, xstar, x, m, plan)?;
    let obj = tilted_objective(phi, lambda, xstar, x, m);
    staged_min_probed(&obj, plan)
}

/// Minimizer set of the tilted objective.
pub fn tilted_prox(
    phi: &FunctionModel,
    lambda: f64,
    xstar: &[f64],
    x: &[f64],
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<EnvelopeResult> {
    tilted_envelope(phi, lambda, xstar, x, m, plan)
}

/// Gradient of the tilted envelope at x: lambda^{-1} J(x - P) where P is the
/// (single-valued) tilted proximal point. A multi-valued prox cluster is a
/// genuine non-smoothness and is returned as an error carrying the cluster.
pub fn envelope_gradient(
    phi: &FunctionModel,
    lambda: f64,
    xstar_bar: &[f64],
    x: &[f64],
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<Vec<f64>> {
    let r = tilted_prox(phi, lambda, xstar_bar, x, m, plan)?;
    if r.value == f64::NEG_INFINITY {
        return Err(Error::input(
            "tilted objective is unbounded below: no proximal point, no gradient",
        ));
    }
    if !r.value.is_finite() || r.minimizers.is_empty() {
        return Err(Error::input("search box does not meet the domain of the model"));
    }
    match r.single_point() {
        Some(p) => {
            let d: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
            let j = m.duality_map(&d)?;
            Ok(j.into_iter().map(|v| v / lambda).collect())
        }
        None => Err(Error::NonSmooth {
            diameter: r.cluster_diameter(),
            cluster: r.minimizers,
        }),
    }
}

/// Bracket for the prox-boundedness threshold produced by scanning a
/// lambda grid.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaThreshold {
    /// Largest tested lambda with a finite envelope at the plan center.
    pub lambda0_lower: Option<f64>,
    /// Smallest tested lambda whose envelope diverges below the box floor.
    pub lambda0_upper: Option<f64>,
    /// True when the scan is consistent: a finite prefix followed by a
    /// divergent suffix with lambda0_lower < lambda0_upper.
    pub bracket_valid: bool,
    /// (lambda, finite) for every tested value, in input order.
    pub tested: Vec<(f64, bool)>,
}

/// Scan a sorted lambda grid and bracket the prox-boundedness threshold.
/// Finiteness is probed at the plan center over a pre-grown box (4x the
/// plan's) so that borderline quadratic growth is not mistaken for
/// divergence at small radii.
pub fn prox_bound_threshold(
    phi: &FunctionModel,
    m: &NormModel,
    plan: &SamplePlan,
    lambda_grid: &[f64],
) -> Result<LambdaThreshold> {
    if lambda_grid.is_empty() {
        return Err(Error::input("lambda grid must be nonempty"));
    }
    for w in lambda_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::input("lambda grid must be strictly ascending"));
        }
    }
    if lambda_grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::input("lambda grid entries must be positive reals"));
    }
    if plan.dim() != phi.n || m.n != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: plan.dim() });
    }
    let x = plan.center();
    let zero = vec![0.0; phi.n];
    let base = plan.scaled_box(4.0);
    let mut tested = Vec::with_capacity(lambda_grid.len());
    for &lam in lambda_grid {
        let obj = tilted_objective(phi, lam, &zero, &x, m);
        let divergent = divergence_probe(&obj, &base)?;
        tested.push((lam, !divergent));
    }
    let lambda0_lower = tested.iter().rev().find(|(_, fin)| *fin).map(|(l, _)| *l);
    let lambda0_upper = tested.iter().find(|(_, fin)| !*fin).map(|(l, _)| *l);
    let monotone = {
        let first_div = tested.iter().position(|(_, fin)| !*fin);
        match first_div {
            None => true,
            Some(i) => tested.iter().skip(i).all(|(_, fin)| !*fin),
        }
    };
    let bracket_valid = match (lambda0_lower, lambda0_upper) {
        (Some(lo), Some(hi)) => monotone && lo < hi,
        _ => false,
    };
    Ok(LambdaThreshold { lambda0_lower, lambda0_upper, bracket_valid, tested })
}

fn require_hilbert(m: &NormModel, what: &str) -> Result<()> {
    if m.p != 2.0 {
        return Err(Error::capability(format!(
            "{what} requires an inner-product norm (p = 2); got p = {}",
            m.p
        )));
    }
    Ok(())
}

/// phi - (sigma/2)||.||^2 as a new model. When the base carries a
/// subdifferential oracle, the shifted model's subdifferential is the base
/// set translated by -sigma J(x) (exact, since the shift is smooth).
pub fn quadratically_shifted(phi: &FunctionModel, sigma: f64, m: &NormModel) -> FunctionModel {
    let base = phi.clone();
    let mm = m.clone();
    let mut out = FunctionModel::new(
        format!("{}-quadshift({sigma})", phi.name),
        phi.n,
        Arc::new(move |w: &[f64]| {
            let fw = base.eval(w);
            if fw == f64::INFINITY {
                return fw;
            }
            fw - 0.5 * sigma * mm.norm_sq(w).expect("dimension fixed at construction")
        }),
    );
    if phi.has_subdiff() {
        let inner = phi.clone();
        let mj = m.clone();
        out = out.with_subdiff(Arc::new(move |x: &[f64]| {
            let j = mj.duality_map(x).expect("dimension fixed at construction");
            let t: Vec<f64> = j.iter().map(|v| sigma * v).collect();
            inner
                .subdiff(x)
                .expect("subdifferential presence checked at construction")
                .translate_neg(&t)
        }));
    }
    out
}

/// Verify the quadratic-shift identity
///   e_lambda(phi)(x) = e_{lambda/(1+sigma lambda)}(psi)(x/(1+sigma lambda))
///                      + sigma/(2(1+sigma lambda)) ||x||^2
/// with psi = phi - (sigma/2)||.||^2, valid in the inner-product case for
/// 0 < lambda < 1/|sigma|.
pub fn check_shift_identity(
    phi: &FunctionModel,
    sigma: f64,
    lambda: f64,
    x: &[f64],
    m: &NormModel,
    plan: &SamplePlan,
    tol: f64,
) -> Result<CertificateReport> {
    require_hilbert(m, "the quadratic shift identity")?;
    if !(sigma.is_finite() && sigma != 0.0) {
        return Err(Error::input("sigma must be a nonzero real"));
    }
    if !(lambda > 0.0 && lambda < 1.0 / sigma.abs()) {
        return Err(Error::input(format!(
            "lambda = {lambda} outside (0, 1/|sigma|) = (0, {})",
            1.0 / sigma.abs()
        )));
    }
    let lhs = moreau_envelope(phi, lambda, x, m, plan)?;
    if !lhs.value.is_finite() {
        return Err(Error::input(
            "envelope of phi is not finite at x: phi must be prox-bounded with lambda below its threshold",
        ));
    }
    let scale = 1.0 + sigma * lambda;
    let lam2 = lambda / scale;
    let x2: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let psi = quadratically_shifted(phi, sigma, m);
    let rhs_env = moreau_envelope(&psi, lam2, &x2, m, plan)?;
    if !rhs_env.value.is_finite() {
        return Err(Error::input("envelope of the shifted model diverged on the plan box"));
    }
    let rhs = rhs_env.value + sigma / (2.0 * scale) * m.norm_sq(x)?;
    let mut acc = SlackAccumulator::new("quadratic_shift_identity", tol);
    let slack = -(lhs.value - rhs).abs();
    acc.push(slack, || Witness {
        inputs: witness_inputs(&[
            ("x", json_vec(x)),
            ("rhs_shifted_envelope", json_num(rhs_env.value)),
        ]),
        lhs: lhs.value,
        rhs,
        slack,
    });
    acc.param("sigma", json_num(sigma));
    acc.param("lambda", json_num(lambda));
    acc.param("lambda_shifted", json_num(lam2));
    acc.note("slack is -|lhs - rhs|; certified means the identity holds within tol");
    Ok(acc.finish())
}

/// Verify the tilt-translation identity
///   e_lambda^{xstar}(phi)(x) = e_lambda(phi)(x + lambda J^{-1} xstar)
///                              - <xstar, x> - (lambda/2)||xstar||_dual^2,
/// valid in the inner-product case.
pub fn check_tilt_identity(
    phi: &FunctionModel,
    lambda: f64,
    xstar: &[f64],
    x: &[f64],
    m: &NormModel,
    plan: &SamplePlan,
    tol: f64,
) -> Result<CertificateReport> {
    require_hilbert(m, "the tilt translation identity")?;
    let lhs = tilted_envelope(phi, lambda, xstar, x, m, plan)?;
    let jinv = m.inverse_duality_map(xstar)?;
    let y: Vec<f64> = x.iter().zip(&jinv).map(|(xi, ji)| xi + lambda * ji).collect();
    let plain = moreau_envelope(phi, lambda, &y, m, plan)?;
    if !lhs.value.is_finite() || !plain.value.is_finite() {
        return Err(Error::input(
            "one of the envelopes is not finite; enlarge the plan box or lower lambda",
        ));
    }
    let rhs = plain.value - dot(xstar, x) - 0.5 * lambda * m.dual().norm_sq(xstar)?;
    let mut acc = SlackAccumulator::new("tilt_translation_identity", tol);
    let slack = -(lhs.value - rhs).abs();
    acc.push(slack, || Witness {
        inputs: witness_inputs(&[
            ("x", json_vec(x)),
            ("xstar", json_vec(xstar)),
            ("translated_point", json_vec(&y)),
        ]),
        lhs: lhs.value,
        rhs,
        slack,
    });
    acc.param("lambda", json_num(lambda));
    acc.note("slack is -|lhs - rhs|; certified means the identity holds within tol");
    Ok(acc.finish())
}
