//! Exact second-order subdifferentials on piecewise-smooth graph patches,
//! and the positive-semidefiniteness certifiers built on them.
//!
//! All cone objects are computed symbolically from the patch geometry.
//! Sampling limits of cones are numerically fragile, so the limiting
//! construction takes its strata from the patch description instead: each
//! stratum contributes the tangent rays it carries arbitrarily close to the
//! base point. In finite dimensions the weak and norm limit flavors of the
//! coderivative coincide, so a single `limiting` flavor is exposed.

use crate::error::{check_dim, Error, Result};
use crate::models::{FunctionModel, Window};
use crate::norm_space::{dot, NormModel};
use crate::plan::SamplePlan;
use crate::report::{json_num, json_vec, witness_inputs, CertificateReport, SlackAccumulator, Witness};
use crate::tol::{CERT_TOL, DUALITY_TOL};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Local description of gph ∂φ near a point of interest.
#[derive(Debug, Clone)]
pub enum GraphPatch {
    /// 1-D graph: tangent rays of the graph at the point itself, plus, for
    /// each family of strata accumulating at the point without containing
    /// it, the (constant) tangent rays carried along that family.
    Curve {
        point_rays: Vec<[f64; 2]>,
        accumulating: Vec<AccumStratum>,
    },
    /// C^2 point: the graph is locally (x, ∇φ(x)) and the coderivative acts
    /// as w -> {H w}.
    SmoothHessian(Vec<Vec<f64>>),
}

/// A family of graph strata whose closure contains the base point.
#[derive(Debug, Clone)]
pub struct AccumStratum {
    pub label: String,
    pub rays: Vec<[f64; 2]>,
}

impl AccumStratum {
    pub fn new(label: impl Into<String>, rays: Vec<[f64; 2]>) -> Self {
        AccumStratum { label: label.into(), rays }
    }
}

/// Regular normal cone to a 1-D graph at a point: the polar of the tangent
/// cone, stored through its tangent-ray generators r_i as
/// N = {p : <p, r_i> <= 0 for all i}.
#[derive(Debug, Clone, Serialize)]
pub struct NormalCone {
    pub tangent_rays: Vec<[f64; 2]>,
}

impl NormalCone {
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.tangent_rays.iter().all(|r| p[0] * r[0] + p[1] * r[1] <= tol)
    }

    /// Coderivative slice {z : (z, -w) ∈ N} = {z : z u_i <= w v_i for all
    /// tangent rays (u_i, v_i)}. Returns the closed interval [lo, hi]
    /// (endpoints may be infinite) or None when empty.
    pub fn coderiv_slice(&self, w: f64) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for r in &self.tangent_rays {
            let (u, v) = (r[0], r[1]);
            if u > 0.0 {
                hi = hi.min(w * v / u);
            } else if u < 0.0 {
                lo = lo.max(w * v / u);
            } else if w * v < 0.0 {
                return None;
            }
        }
        if lo > hi {
            None
        } else {
            Some((lo, hi))
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "tangent_rays": self.tangent_rays,
            "halfspaces": "p such that dot(p, ray) <= 0 for every tangent ray",
        })
    }
}

/// One convex piece of a second-order set.
#[derive(Debug, Clone, PartialEq)]
pub enum CoderivPiece {
    /// Isolated covector (n-D).
    PointND(Vec<f64>),
    /// 1-D closed interval; endpoints may be infinite.
    Interval { lo: f64, hi: f64 },
}

/// A finite union of convex pieces (the limiting construction is a union
/// over strata, so non-convex values occur).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoderivSet {
    pub pieces: Vec<CoderivPiece>,
}

impl CoderivSet {
    pub fn empty() -> Self {
        CoderivSet { pieces: Vec::new() }
    }

    pub fn point(z: Vec<f64>) -> Self {
        CoderivSet { pieces: vec![CoderivPiece::PointND(z)] }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        CoderivSet { pieces: vec![CoderivPiece::Interval { lo, hi }] }
    }

    pub fn is_empty_set(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn union(mut self, other: CoderivSet) -> CoderivSet {
        for p in other.pieces {
            if !self.pieces.contains(&p) {
                self.pieces.push(p);
            }
        }
        self
    }

    /// inf over z in the set of <z, w>. None for the empty set; -inf when a
    /// piece is unbounded against w.
    pub fn inf_pairing(&self, w: &[f64]) -> Option<f64> {
        self.pieces
            .iter()
            .map(|p| match p {
                CoderivPiece::PointND(z) => dot(z, w),
                CoderivPiece::Interval { lo, hi } => {
                    let wv = w[0];
                    if wv == 0.0 {
                        0.0
                    } else if wv > 0.0 {
                        if lo.is_finite() { lo * wv } else { f64::NEG_INFINITY }
                    } else if hi.is_finite() {
                        hi * wv
                    } else {
                        f64::NEG_INFINITY
                    }
                }
            })
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    }

    /// A covector attaining (or marking the direction of) the infimum.
    pub fn inf_witness(&self, w: &[f64]) -> Option<Vec<f64>> {
        let target = self.inf_pairing(w)?;
        for p in &self.pieces {
            match p {
                CoderivPiece::PointND(z) => {
                    if (dot(z, w) - target).abs() <= 1e-12 || target.is_infinite() {
                        if dot(z, w) == target || (dot(z, w) - target).abs() <= 1e-12 {
                            return Some(z.clone());
                        }
                    }
                }
                CoderivPiece::Interval { lo, hi } => {
                    let z = if w[0] >= 0.0 { *lo } else { *hi };
                    let val = if z.is_finite() { z * w[0] } else { f64::NEG_INFINITY };
                    if val == target || (val - target).abs() <= 1e-12 {
                        return Some(vec![z]);
                    }
                }
            }
        }
        None
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.pieces.iter().any(|p| match p {
            CoderivPiece::PointND(q) => {
                q.len() == z.len() && q.iter().zip(z).all(|(a, b)| (a - b).abs() <= tol)
            }
            CoderivPiece::Interval { lo, hi } => {
                z.len() == 1 && z[0] >= lo - tol && z[0] <= hi + tol
            }
        })
    }

    /// Finite representatives (interval endpoints and midpoints clamped to
    /// [-R, R]); used by containment tests.
    pub fn sample_points(&self, clamp: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for p in &self.pieces {
            match p {
                CoderivPiece::PointND(z) => out.push(z.clone()),
                CoderivPiece::Interval { lo, hi } => {
                    let a = lo.max(-clamp);
                    let b = hi.min(clamp);
                    if a <= b {
                        out.push(vec![a]);
                        out.push(vec![b]);
                        out.push(vec![0.5 * (a + b)]);
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.pieces
                .iter()
                .map(|p| match p {
                    CoderivPiece::PointND(z) => serde_json::json!({"point": json_vec(z)}),
                    CoderivPiece::Interval { lo, hi } => {
                        serde_json::json!({"interval": [json_num(*lo), json_num(*hi)]})
                    }
                })
                .collect(),
        )
    }
}

/// Which second-order construction a PSD certification uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdFlavor {
    /// Regular coderivative at each sampled graph point.
    Combined,
    /// Adds strata accumulating at each sampled point.
    Limiting,
}

impl std::fmt::Display for PsdFlavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PsdFlavor::Combined => write!(f, "combined"),
            PsdFlavor::Limiting => write!(f, "limiting"),
        }
    }
}

fn patch_or_err(phi: &FunctionModel, x: &[f64], xstar: &[f64]) -> Result<GraphPatch> {
    phi.patch_at(x, xstar).ok_or_else(|| {
        Error::capability(format!(
            "model '{}' has no recognizable graph patch at ({:?}, {:?})",
            phi.name, x, xstar
        ))
    })
}

fn require_on_graph(phi: &FunctionModel, x: &[f64], xstar: &[f64]) -> Result<()> {
    if phi.has_subdiff() && !phi.subdiff(x)?.contains(xstar, DUALITY_TOL.max(1e-8)) {
        return Err(Error::input(format!(
            "({x:?}, {xstar:?}) is not on the subdifferential graph of '{}'",
            phi.name
        )));
    }
    Ok(())
}

/// Regular normal cone to gph ∂φ at (x, x*), from the patch geometry.
/// 1-D models only; C^2 patches reduce to the tangent line of slope
/// H[0][0].
pub fn graph_regular_normal_cone(phi: &FunctionModel, x: &[f64], xstar: &[f64]) -> Result<NormalCone> {
    check_dim(phi.n, x)?;
    require_on_graph(phi, x, xstar)?;
    if phi.n != 1 {
        return Err(Error::capability(
            "graph normal cones are implemented for 1-D models; use the Hessian action for smooth n-D models",
        ));
    }
    match patch_or_err(phi, x, xstar)? {
        GraphPatch::Curve { point_rays, .. } => Ok(NormalCone { tangent_rays: point_rays }),
        GraphPatch::SmoothHessian(h) => {
            let s = h[0][0];
            Ok(NormalCone { tangent_rays: vec![[1.0, s], [-1.0, -s]] })
        }
    }
}

fn slice_from_rays(rays: &[[f64; 2]], w: f64) -> CoderivSet {
    match (NormalCone { tangent_rays: rays.to_vec() }).coderiv_slice(w) {
        Some((lo, hi)) => CoderivSet::interval(lo, hi),
        None => CoderivSet::empty(),
    }
}

fn coderiv_of_patch(patch: &GraphPatch, w: &[f64], limiting: bool) -> CoderivSet {
    match patch {
        GraphPatch::SmoothHessian(h) => {
            let z: Vec<f64> = h.iter().map(|row| dot(row, w)).collect();
            CoderivSet::point(z)
        }
        GraphPatch::Curve { point_rays, accumulating } => {
            let mut set = slice_from_rays(point_rays, w[0]);
            if limiting {
                for s in accumulating {
                    set = set.union(slice_from_rays(&s.rays, w[0]));
                }
            }
            set
        }
    }
}

/// {z : (z, -w) ∈ N̂((x,x*); gph ∂φ)}: the regular coderivative of the
/// subdifferential applied to w. May be empty.
pub fn combined_second_subdiff(
    phi: &FunctionModel,
    x: &[f64],
    xstar: &[f64],
    w_dir: &[f64],
) -> Result<CoderivSet> {
    check_dim(phi.n, x)?;
    check_dim(phi.n, w_dir)?;
    require_on_graph(phi, x, xstar)?;
    let patch = patch_or_err(phi, x, xstar)?;
    Ok(coderiv_of_patch(&patch, w_dir, false))
}

/// Union of the regular coderivative with the slices carried by strata
/// accumulating at (x̄, x̄*): the outer limit over graph points converging
/// to the base pair, computed from the patch decomposition.
pub fn limiting_second_subdiff(
    phi: &FunctionModel,
    xbar: &[f64],
    xbar_star: &[f64],
    w_dir: &[f64],
) -> Result<CoderivSet> {
    check_dim(phi.n, xbar)?;
    check_dim(phi.n, w_dir)?;
    require_on_graph(phi, xbar, xbar_star)?;
    let patch = patch_or_err(phi, xbar, xbar_star)?;
    Ok(coderiv_of_patch(&patch, w_dir, true))
}

/// Deterministic unit directions: axis vectors both ways, plus normalized
/// Gaussian draws in dimensions above one.
pub fn unit_directions(n: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        out.push(e.clone());
        e[i] = -1.0;
        out.push(e);
    }
    if n > 1 && extra > 0 {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed ^ 0xD14EC7);
        while out.len() < 2 * n + extra {
            // Box-Muller pairs give an isotropic Gaussian, hence uniform
            // directions after normalization.
            let mut v = Vec::with_capacity(n);
            while v.len() < n {
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let r = (-2.0 * u1.ln()).sqrt();
                v.push(r * (2.0 * std::f64::consts::PI * u2).cos());
                if v.len() < n {
                    v.push(r * (2.0 * std::f64::consts::PI * u2).sin());
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-9 {
                out.push(v.into_iter().map(|t| t / norm).collect());
            }
        }
    }
    out
}

/// Positive-semidefiniteness certification: over sampled graph points
/// (x, y) ∈ gph ∂φ ∩ (U × V) (no value filter) and unit directions w, the
/// slack <z, w> - σ‖w‖² must stay above -tol for every z in the chosen
/// second-order set. Empty sets contribute vacuously. Windows here are
/// Euclidean: the second-order theory is a Hilbert-space statement.
pub fn psd_certify(
    phi: &FunctionModel,
    w: &Window,
    sigma: f64,
    flavor: PsdFlavor,
    plan: &SamplePlan,
) -> Result<CertificateReport> {
    if sigma < 0.0 {
        return Err(Error::input("sigma must be nonnegative"));
    }
    let m = NormModel::euclidean(phi.n);
    w.validate_on(phi, 1e-8)?;
    let samples = crate::models::collect_graph(
        phi,
        plan,
        &m,
        Some((&w.center_x, w.r1)),
        Some((&w.center_xstar, w.r2)),
        None,
    )?;
    let dirs = unit_directions(phi.n, 16, plan.seed);
    let shards: Vec<SlackAccumulator> = samples
        .par_iter()
        .map(|s| {
            let mut acc = SlackAccumulator::new("psd", CERT_TOL);
            let patch = match phi.patch_at(&s.x, &s.xstar) {
                Some(p) => p,
                None => return acc,
            };
            for dir in &dirs {
                let set = coderiv_of_patch(&patch, dir, flavor == PsdFlavor::Limiting);
                if let Some(inf) = set.inf_pairing(dir) {
                    let slack = inf - sigma * dot(dir, dir);
                    let z = set.inf_witness(dir);
                    acc.push(slack, || Witness {
                        inputs: witness_inputs(&[
                            ("x", json_vec(&s.x)),
                            ("y", json_vec(&s.xstar)),
                            ("w", json_vec(dir)),
                            (
                                "z",
                                z.map(|zv| json_vec(&zv)).unwrap_or(Value::Null),
                            ),
                        ]),
                        lhs: inf,
                        rhs: sigma * dot(dir, dir),
                        slack,
                    });
                }
            }
            acc
        })
        .collect();
    let mut acc = SlackAccumulator::new("psd", CERT_TOL);
    let mut missing_patch = 0usize;
    for s in &samples {
        if phi.patch_at(&s.x, &s.xstar).is_none() {
            missing_patch += 1;
        }
    }
    for shard in shards {
        acc.merge(shard);
    }
    if missing_patch > 0 {
        return Err(Error::capability(format!(
            "{missing_patch} sampled graph points carry no patch; cannot certify"
        )));
    }
    acc.param("sigma", json_num(sigma));
    acc.param("flavor", Value::String(flavor.to_string()));
    acc.param("graph_points", Value::from(samples.len()));
    acc.param("directions", Value::from(dirs.len()));
    Ok(acc.finish())
}

/// Point-based positive-definiteness at a stationary point: <z, w> > tol for
/// every unit w and z in the limiting second-order set at (x̄, 0).
/// Certified only with a strictly positive margin.
pub fn pointbased_check(phi: &FunctionModel, xbar: &[f64], plan: &SamplePlan) -> Result<CertificateReport> {
    check_dim(phi.n, xbar)?;
    let zero = vec![0.0; phi.n];
    if phi.has_subdiff() && !phi.subdiff(xbar)?.contains(&zero, DUALITY_TOL.max(1e-8)) {
        return Err(Error::input("0 must be a subgradient at the base point"));
    }
    let dirs = unit_directions(phi.n, 16, plan.seed);
    let mut acc = SlackAccumulator::new("pointbased", CERT_TOL);
    for dir in &dirs {
        let set = limiting_second_subdiff(phi, xbar, &zero, dir)?;
        if let Some(inf) = set.inf_pairing(dir) {
            let z = set.inf_witness(dir);
            acc.push(inf, || Witness {
                inputs: witness_inputs(&[
                    ("x", json_vec(xbar)),
                    ("w", json_vec(dir)),
                    ("z", z.map(|zv| json_vec(&zv)).unwrap_or(Value::Null)),
                ]),
                lhs: inf,
                rhs: 0.0,
                slack: inf,
            });
        }
    }
    acc.param("directions", Value::from(dirs.len()));
    Ok(acc.finish_strict_positive())
}
