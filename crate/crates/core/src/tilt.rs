//! Tilt maps and tilt-stability certification.
//!
//! The tilt map sends a linear perturbation `x*` to the box-constrained
//! minimizer set of `phi - <x*, .>`. A point is certified tilt-stable when
//! the zero tilt recovers the base point, every tilt in the dual ball yields
//! a single-valued localized argmin away from the box boundary, and the
//! displacement-to-tilt ratios across adjacent tilts stay bounded (the
//! sampled Lipschitz modulus). A companion check certifies the quadratic
//! growth inequality along localized subgradient graph samples.

use crate::error::{check_dim, Error, Result};
use crate::minimize::{staged_min, EnvelopeResult};
use crate::models::{FunctionModel, Window};
use crate::norm_space::{dot, NormModel};
use crate::plan::{linspace, SamplePlan};
use crate::report::{json_num, json_vec, witness_inputs, CertificateReport, SlackAccumulator, Witness};
use crate::tol;
use crate::varconvex::{require_on_graph, vc_scan, vc_slack, QuadTerm};
use serde_json::Value;

/// Tilts sampled per axis (odd, so zero is always on the grid).
pub const TILTS_PER_AXIS: usize = 21;

/// Box-constrained argmin of the tilted objective `phi(x) - <xstar, x>` over
/// the plan's box, via the staged derivative-free search. The box is the
/// localization region, so no unboundedness probe runs; a minimizer on the
/// box boundary is reported in the diagnostics.
pub fn tilt_map(
    phi: &FunctionModel,
    xstar: &[f64],
    plan: &SamplePlan,
) -> Result<EnvelopeResult> {
    check_dim(phi.n, xstar)?;
    if plan.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: plan.dim() });
    }
    let obj = move |x: &[f64]| phi.eval(x) - dot(xstar, x);
    staged_min(&obj, plan)
}

/// One row of the sampled Lipschitz-modulus table: two adjacent tilts on the
/// same axis (signed coefficients), the distance between their argmins, and
/// the displacement-to-tilt ratio.
#[derive(Debug, Clone, Copy)]
pub struct ModulusRow {
    pub axis: usize,
    pub tilt1: f64,
    pub tilt2: f64,
    pub displacement: f64,
    pub ratio: f64,
}

/// Certificate plus the modulus material the CLI renders as CSV.
#[derive(Debug)]
pub struct TiltCertificate {
    pub report: CertificateReport,
    /// Largest displacement-to-tilt ratio over adjacent solved tilts; None
    /// when no adjacent pair was solvable.
    pub modulus: Option<f64>,
    pub table: Vec<ModulusRow>,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Certifies tilt stability of `xbar` over the plan's box: for every tilt
/// `t e_i` with |t| <= v_radius on each axis,
///
/// * the zero tilt must recover `xbar` as a single-valued argmin,
/// * every tilted argmin must be single-valued (cluster diameter below the
///   single-valued tolerance) and interior — a boundary argmin means the
///   localization box is too large and refutes,
/// * adjacent tilts on an axis contribute a displacement-to-tilt ratio to
///   the sampled Lipschitz modulus.
///
/// Verdicts are sample-level: a finite table bounds the modulus on the grid
/// but cannot prove Lipschitz continuity between grid points.
pub fn tilt_stability_certify(
    phi: &FunctionModel,
    xbar: &[f64],
    v_radius: f64,
    plan: &SamplePlan,
) -> Result<TiltCertificate> {
    check_dim(phi.n, xbar)?;
    if plan.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: plan.dim() });
    }
    if !(v_radius.is_finite() && v_radius > 0.0) {
        return Err(Error::input("v_radius must be finite and positive"));
    }
    for (i, xi) in xbar.iter().enumerate() {
        if *xi < plan.box_lo[i] || *xi > plan.box_hi[i] {
            return Err(Error::input("base point must lie inside the localization box"));
        }
    }
    let mut acc = SlackAccumulator::new("tilt_stability", tol::CERT_TOL);
    if phi.has_subdiff() {
        if !phi.subdiff(xbar)?.contains(&vec![0.0; phi.n], tol::CERT_TOL) {
            return Err(Error::input(
                "zero is not a subgradient at the base point; it is not a \
                 candidate local minimizer",
            ));
        }
    } else {
        acc.note("model has no subdifferential oracle; stationarity of the base point unchecked");
    }

    // Zero tilt: the argmin must be the base point.
    let m0 = tilt_map(phi, &vec![0.0; phi.n], plan)?;
    push_argmin_checks(&mut acc, &m0, 0, 0.0, Some(xbar));

    let mut table: Vec<ModulusRow> = Vec::new();
    let mut boundary_hits = if m0.diagnostics.boundary_hit { 1usize } else { 0 };
    for axis in 0..phi.n {
        let mut prev: Option<(f64, Vec<f64>)> = None;
        for t in linspace(-v_radius, v_radius, TILTS_PER_AXIS) {
            let mut tilt = vec![0.0; phi.n];
            tilt[axis] = t;
            let r = if t == 0.0 { m0.clone() } else { tilt_map(phi, &tilt, plan)? };
            if t != 0.0 {
                push_argmin_checks(&mut acc, &r, axis, t, None);
                if r.diagnostics.boundary_hit {
                    boundary_hits += 1;
                }
            }
            let solved = r.is_single_valued() && !r.diagnostics.boundary_hit;
            let here = if solved { r.single_point().cloned() } else { None };
            if let (Some((tp, mp)), Some(mh)) = (&prev, &here) {
                let displacement = euclid(mp, mh);
                let dt = (t - tp).abs();
                table.push(ModulusRow {
                    axis,
                    tilt1: *tp,
                    tilt2: t,
                    displacement,
                    ratio: displacement / dt,
                });
            }
            prev = here.map(|p| (t, p));
        }
    }
    let modulus = table
        .iter()
        .map(|r| r.ratio)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |v| v.max(r))));

    acc.param("v_radius", json_num(v_radius));
    acc.param("tilts_per_axis", Value::from(TILTS_PER_AXIS as u64));
    acc.param("u_box_lo", json_vec(&plan.box_lo));
    acc.param("u_box_hi", json_vec(&plan.box_hi));
    acc.param("boundary_hits", Value::from(boundary_hits as u64));
    acc.param(
        "lipschitz_modulus",
        modulus.map(json_num).unwrap_or(Value::Null),
    );
    acc.param(
        "modulus_table",
        Value::Array(
            table
                .iter()
                .map(|r| {
                    Value::Array(vec![
                        json_num(r.tilt1),
                        json_num(r.tilt2),
                        json_num(r.displacement),
                        json_num(r.ratio),
                    ])
                })
                .collect(),
        ),
    );
    acc.note(
        "modulus is sampled on adjacent tilt pairs; it bounds the grid, not the \
         continuum",
    );
    Ok(TiltCertificate { report: acc.finish(), modulus, table })
}

/// Slack bookkeeping for one tilted argmin: single-valuedness (diameter
/// below the single-valued tolerance), recovery of the expected point when
/// given, interiority, and solvability.
fn push_argmin_checks(
    acc: &mut SlackAccumulator,
    r: &EnvelopeResult,
    axis: usize,
    t: f64,
    expect: Option<&[f64]>,
) {
    let tag = |key: &str| -> Vec<(&str, Value)> {
        vec![
            ("axis", Value::from(axis as u64)),
            ("tilt", json_num(t)),
            ("check", Value::String(key.into())),
        ]
    };
    if r.minimizers.is_empty() {
        let slack = f64::NEG_INFINITY;
        acc.push(slack, || Witness {
            inputs: witness_inputs(&tag("argmin_nonempty")),
            lhs: slack,
            rhs: 0.0,
            slack,
        });
        return;
    }
    let diam = r.cluster_diameter();
    let slack = tol::CLUSTER_SINGLE - diam;
    acc.push(slack, || Witness {
        inputs: witness_inputs(&tag("single_valued")),
        lhs: tol::CLUSTER_SINGLE,
        rhs: diam,
        slack,
    });
    if r.diagnostics.boundary_hit {
        let slack = -1.0;
        acc.push(slack, || Witness {
            inputs: witness_inputs(&tag("interior_argmin")),
            lhs: 0.0,
            rhs: 1.0,
            slack,
        });
    }
    if let Some(x) = expect {
        let far = r.minimizers.iter().map(|p| euclid(p, x)).fold(0.0f64, f64::max);
        let slack = tol::CLUSTER_SINGLE - far;
        acc.push(slack, || Witness {
            inputs: witness_inputs(&tag("recovers_base_point")),
            lhs: tol::CLUSTER_SINGLE,
            rhs: far,
            slack,
        });
    }
}

/// Quadratic growth along the localized subgradient graph: every graph
/// sample `(u, u*)` in the window must satisfy
///
/// ```text
/// phi(x) >= phi(u) + <u*, x - u> + (sigma/2) ||x - u||^2
/// ```
///
/// on sampled window points. When p = 2 this coincides with the
/// variational-convexity scan (the Lyapunov quadratic reduces to the squared
/// distance), sample set and slacks included.
pub fn second_order_growth_check(
    phi: &FunctionModel,
    w: &Window,
    sigma: f64,
    m: &NormModel,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::input("sigma must be finite and nonnegative"));
    }
    require_on_graph(phi, &w.center_x, &w.center_xstar)?;
    let scan = vc_scan(phi, w, m, plan)?;
    let mut acc = SlackAccumulator::new("second_order_growth", tol::CERT_TOL);
    for u in &scan.samples {
        for x in &scan.xs {
            if let Some((lhs, rhs, slack)) =
                vc_slack(phi, u, x, sigma, m, QuadTerm::SquaredDistance)?
            {
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
