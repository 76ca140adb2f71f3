//! Function oracles with analytic subdifferentials, localization windows,
//! graph sampling, and the example gallery.
//!
//! Values are extended reals: +inf encodes points outside the domain, and
//! IEEE addition implements inf-addition. Subdifferentials are represented
//! exactly (points, intervals, finite hulls) because the certifiers need
//! exact endpoints at kinks.

pub mod epi;
pub mod gallery;
pub mod json;

use crate::error::{check_dim, Error, Result};
use crate::norm_space::NormModel;
use crate::plan::SamplePlan;
use crate::second_order::GraphPatch;
use serde::Serialize;
use std::sync::Arc;

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type SubdiffFn = Arc<dyn Fn(&[f64]) -> SubdiffSet + Send + Sync>;
/// Closed-form Euclidean proximal map: (lambda, x) -> argmin.
pub type ProxFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
/// Local description of gph of the subdifferential at (x, x*).
pub type PatchFn = Arc<dyn Fn(&[f64], &[f64]) -> Option<GraphPatch> + Send + Sync>;
pub type HessFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// Global quadratic minorant phi >= alpha ||x - anchor||^2 + beta.
#[derive(Debug, Clone, Serialize)]
pub struct ProxBound {
    pub alpha: f64,
    pub beta: f64,
    pub anchor: Vec<f64>,
}

/// Certified metadata carried by a model (asserted verdicts, fast paths).
#[derive(Debug, Clone, Default, Serialize)]
pub struct ModelMeta {
    pub is_convex: bool,
    /// (r, eps) when the model is asserted prox-regular at its reference pair.
    pub prox_regular: Option<(f64, f64)>,
    pub prox_bounded: Option<ProxBound>,
    pub subdiff_continuous: bool,
    /// Present when phi = (alpha/2)||x||_2^2: enables exact envelope forms.
    pub quadratic_alpha: Option<f64>,
    /// Suggested stress pairs for midpoint/secant refutation scans.
    #[serde(skip)]
    pub stress_pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

/// An extended-real-valued function with optional analytic oracles.
#[derive(Clone)]
pub struct FunctionModel {
    pub name: String,
    pub n: usize,
    eval: EvalFn,
    subdiff: Option<SubdiffFn>,
    prox_oracle: Option<ProxFn>,
    patch: Option<PatchFn>,
    hessian: Option<HessFn>,
    pub meta: ModelMeta,
}

impl std::fmt::Debug for FunctionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionModel")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("has_subdiff", &self.subdiff.is_some())
            .field("has_prox_oracle", &self.prox_oracle.is_some())
            .field("has_patch", &self.patch.is_some())
            .field("has_hessian", &self.hessian.is_some())
            .finish()
    }
}

impl FunctionModel {
    pub fn new(name: impl Into<String>, n: usize, eval: EvalFn) -> Self {
        FunctionModel {
            name: name.into(),
            n,
            eval,
            subdiff: None,
            prox_oracle: None,
            patch: None,
            hessian: None,
            meta: ModelMeta::default(),
        }
    }

    pub fn with_subdiff(mut self, f: SubdiffFn) -> Self {
        self.subdiff = Some(f);
        self
    }

    pub fn with_prox_oracle(mut self, f: ProxFn) -> Self {
        self.prox_oracle = Some(f);
        self
    }

    pub fn with_patch(mut self, f: PatchFn) -> Self {
        self.patch = Some(f);
        self
    }

    pub fn with_hessian(mut self, f: HessFn) -> Self {
        self.hessian = Some(f);
        self
    }

    pub fn with_meta(mut self, meta: ModelMeta) -> Self {
        self.meta = meta;
        self
    }

    /// phi(x) as an extended real (+inf outside the domain).
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        (self.eval)(x)
    }

    pub fn eval_checked(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n, x)?;
        Ok((self.eval)(x))
    }

    pub fn has_subdiff(&self) -> bool {
        self.subdiff.is_some()
    }

    pub fn subdiff(&self, x: &[f64]) -> Result<SubdiffSet> {
        check_dim(self.n, x)?;
        match &self.subdiff {
            Some(f) => Ok(f(x)),
            None => Err(Error::capability(format!(
                "model '{}' has no subdifferential oracle",
                self.name
            ))),
        }
    }

    pub fn prox_closed_form(&self, lambda: f64, x: &[f64]) -> Option<Vec<f64>> {
        self.prox_oracle.as_ref().map(|f| f(lambda, x))
    }

    pub fn patch_at(&self, x: &[f64], xstar: &[f64]) -> Option<GraphPatch> {
        self.patch.as_ref().and_then(|f| f(x, xstar))
    }

    pub fn hessian_at(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        self.hessian.as_ref().map(|f| f(x))
    }

    /// The tilted model phi - <xstar, .> (same subdifferential shifted).
    pub fn tilted(&self, xstar: &[f64]) -> Result<FunctionModel> {
        check_dim(self.n, xstar)?;
        let t = xstar.to_vec();
        let base_eval = self.eval.clone();
        let eval: EvalFn = {
            let t = t.clone();
            Arc::new(move |x| base_eval(x) - crate::norm_space::dot(&t, x))
        };
        let mut out = FunctionModel::new(format!("{}~tilted", self.name), self.n, eval);
        if let Some(sd) = &self.subdiff {
            let sd = sd.clone();
            let t = t.clone();
            out = out.with_subdiff(Arc::new(move |x| sd(x).translate_neg(&t)));
        }
        out.meta.is_convex = self.meta.is_convex;
        out.meta.subdiff_continuous = self.meta.subdiff_continuous;
        Ok(out)
    }
}

/// Exact finite representation of a subdifferential value.
#[derive(Debug, Clone, PartialEq)]
pub enum SubdiffSet {
    Empty,
    Point(Vec<f64>),
    /// Finite set of isolated covectors.
    Points(Vec<Vec<f64>>),
    /// 1-D: ordered, pairwise disjoint closed intervals; endpoints may be
    /// +-inf (clamped against a finite ball before enumeration).
    Intervals(Vec<(f64, f64)>),
    /// n-D: convex hull of finitely many generators.
    Hull(Vec<Vec<f64>>),
}

impl SubdiffSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        SubdiffSet::Intervals(vec![(lo, hi)])
    }

    pub fn is_empty_set(&self) -> bool {
        match self {
            SubdiffSet::Empty => true,
            SubdiffSet::Points(ps) => ps.is_empty(),
            SubdiffSet::Intervals(iv) => iv.is_empty(),
            SubdiffSet::Hull(g) => g.is_empty(),
            SubdiffSet::Point(_) => false,
        }
    }

    /// Membership within a componentwise tolerance.
    pub fn contains(&self, xstar: &[f64], tol: f64) -> bool {
        match self {
            SubdiffSet::Empty => false,
            SubdiffSet::Point(p) => close(p, xstar, tol),
            SubdiffSet::Points(ps) => ps.iter().any(|p| close(p, xstar, tol)),
            SubdiffSet::Intervals(iv) => {
                xstar.len() == 1
                    && iv
                        .iter()
                        .any(|(lo, hi)| xstar[0] >= lo - tol && xstar[0] <= hi + tol)
            }
            SubdiffSet::Hull(gens) => hull_distance(gens, xstar) <= tol,
        }
    }

    /// Euclidean distance from a covector to the set; +inf for the empty set
    /// (or a dimension mismatch). Exact for points, point lists, and 1-D
    /// intervals; hull distances use a Frank-Wolfe estimate (an upper bound,
    /// safe for membership-style slacks).
    pub fn distance_to(&self, y: &[f64]) -> f64 {
        let euclid = |p: &[f64]| -> f64 {
            if p.len() != y.len() {
                return f64::INFINITY;
            }
            p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        };
        match self {
            SubdiffSet::Empty => f64::INFINITY,
            SubdiffSet::Point(p) => euclid(p),
            SubdiffSet::Points(ps) => ps.iter().map(|p| euclid(p)).fold(f64::INFINITY, f64::min),
            SubdiffSet::Intervals(iv) => {
                if y.len() != 1 {
                    return f64::INFINITY;
                }
                iv.iter()
                    .map(|&(lo, hi)| {
                        if y[0] < lo {
                            lo - y[0]
                        } else if y[0] > hi {
                            y[0] - hi
                        } else {
                            0.0
                        }
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            SubdiffSet::Hull(g) => hull_distance(g, y),
        }
    }

    /// Translate the set by -t (subdifferential of the tilted function).
    pub fn translate_neg(&self, t: &[f64]) -> SubdiffSet {
        let shift = |p: &Vec<f64>| p.iter().zip(t).map(|(a, b)| a - b).collect::<Vec<f64>>();
        match self {
            SubdiffSet::Empty => SubdiffSet::Empty,
            SubdiffSet::Point(p) => SubdiffSet::Point(shift(p)),
            SubdiffSet::Points(ps) => SubdiffSet::Points(ps.iter().map(shift).collect()),
            SubdiffSet::Intervals(iv) => {
                SubdiffSet::Intervals(iv.iter().map(|(lo, hi)| (lo - t[0], hi - t[0])).collect())
            }
            SubdiffSet::Hull(g) => SubdiffSet::Hull(g.iter().map(shift).collect()),
        }
    }

    /// Finite enumeration used by graph sampling: interval endpoints plus the
    /// midpoint plus up to 5 interior samples per interval; point sets as-is;
    /// hulls by generators plus centroid. 1-D intervals are clamped to
    /// [center - radius, center + radius] first so infinite endpoints never
    /// escape. Output is sorted and deduplicated for determinism.
    pub fn enumerate(&self, clamp_1d: Option<(f64, f64)>) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        match self {
            SubdiffSet::Empty => {}
            SubdiffSet::Point(p) => out.push(p.clone()),
            SubdiffSet::Points(ps) => out.extend(ps.iter().cloned()),
            SubdiffSet::Intervals(iv) => {
                for &(lo, hi) in iv {
                    let (mut lo, mut hi) = (lo, hi);
                    if let Some((c, r)) = clamp_1d {
                        lo = lo.max(c - r);
                        hi = hi.min(c + r);
                    }
                    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                        continue;
                    }
                    if hi - lo < 1e-14 {
                        out.push(vec![0.5 * (lo + hi)]);
                        continue;
                    }
                    out.push(vec![lo]);
                    out.push(vec![hi]);
                    out.push(vec![0.5 * (lo + hi)]);
                    for i in 1..=5 {
                        out.push(vec![lo + (hi - lo) * i as f64 / 6.0]);
                    }
                }
            }
            SubdiffSet::Hull(gens) => {
                out.extend(gens.iter().cloned());
                if gens.len() > 1 {
                    let n = gens[0].len();
                    let mut c = vec![0.0; n];
                    for g in gens {
                        for (ci, gi) in c.iter_mut().zip(g) {
                            *ci += gi / gens.len() as f64;
                        }
                    }
                    out.push(c);
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).expect("subgradient samples must not be NaN"));
        out.dedup();
        out
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Distance from a point to the convex hull of generators. Exact for one
/// generator and in 1-D; otherwise a Frank-Wolfe estimate (upper bound),
/// ample for the membership tolerances used on the finite-max hull models.
fn hull_distance(gens: &[Vec<f64>], y: &[f64]) -> f64 {
    if gens.is_empty() {
        return f64::INFINITY;
    }
    let n = y.len();
    if n == 1 {
        let lo = gens.iter().map(|g| g[0]).fold(f64::INFINITY, f64::min);
        let hi = gens.iter().map(|g| g[0]).fold(f64::NEG_INFINITY, f64::max);
        return if y[0] < lo {
            lo - y[0]
        } else if y[0] > hi {
            y[0] - hi
        } else {
            0.0
        };
    }
    // Frank-Wolfe on min ||z - y||^2 over the hull.
    let mut z: Vec<f64> = gens[0].clone();
    for k in 0..2000 {
        let grad: Vec<f64> = z.iter().zip(y).map(|(zi, yi)| zi - yi).collect();
        let best = gens
            .iter()
            .min_by(|a, b| {
                crate::norm_space::dot(&grad, a)
                    .total_cmp(&crate::norm_space::dot(&grad, b))
            })
            .unwrap();
        let gamma = 2.0 / (k as f64 + 2.0);
        for (zi, bi) in z.iter_mut().zip(best) {
            *zi += gamma * (bi - *zi);
        }
    }
    z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// A graph point (x, x*, phi(x)) with x* in the subdifferential at x.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub x: Vec<f64>,
    pub xstar: Vec<f64>,
    pub fx: f64,
}

/// Localization (U, V, eps): U = open ball of radius r1 about center_x in the
/// model norm, V = open dual-norm ball of radius r2 about center_xstar, and
/// the sublevel filter phi(x) < phi(center_x) + eps.
#[derive(Debug, Clone, Serialize)]
pub struct Window {
    pub center_x: Vec<f64>,
    pub center_xstar: Vec<f64>,
    pub r1: f64,
    pub r2: f64,
    pub eps: f64,
}

impl Window {
    pub fn new(center_x: Vec<f64>, center_xstar: Vec<f64>, r1: f64, r2: f64, eps: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0 && eps > 0.0) {
            return Err(Error::input("window radii and eps must be positive"));
        }
        if center_x.len() != center_xstar.len() {
            return Err(Error::input("window centers must share a dimension"));
        }
        Ok(Window { center_x, center_xstar, r1, r2, eps })
    }

    /// Checks the center pair lies on the subdifferential graph.
    pub fn validate_on(&self, phi: &FunctionModel, tol: f64) -> Result<()> {
        let fx = phi.eval_checked(&self.center_x)?;
        if !fx.is_finite() {
            return Err(Error::input("window center has infinite value"));
        }
        if phi.has_subdiff() && !phi.subdiff(&self.center_x)?.contains(&self.center_xstar, tol) {
            return Err(Error::input(format!(
                "window center covector is not in the subdifferential at the center (tol {tol:.1e})"
            )));
        }
        Ok(())
    }

    pub fn contains_x(&self, m: &NormModel, x: &[f64]) -> Result<bool> {
        Ok(m.dist(x, &self.center_x)? < self.r1)
    }

    pub fn contains_xstar(&self, m: &NormModel, xstar: &[f64]) -> Result<bool> {
        let d: Vec<f64> = xstar.iter().zip(&self.center_xstar).map(|(a, b)| a - b).collect();
        Ok(m.dual_norm(&d)? < self.r2)
    }

    /// Default search plan covering the U ball.
    pub fn default_plan(&self, seed: u64, grid_per_axis: usize, qmc_points: usize) -> Result<SamplePlan> {
        SamplePlan::centered(seed, grid_per_axis, qmc_points, &self.center_x, self.r1)
    }
}

/// Shared graph collection: x from the plan's point stream, optionally
/// filtered by an x-ball, a dual-norm x*-ball, and a value cutoff
/// (fx < cutoff). Enumeration of each subdifferential set is clamped to the
/// x*-ball in 1-D so infinite intervals stay finite.
pub fn collect_graph(
    phi: &FunctionModel,
    plan: &SamplePlan,
    m: &NormModel,
    x_ball: Option<(&[f64], f64)>,
    xstar_ball: Option<(&[f64], f64)>,
    value_cutoff: Option<f64>,
) -> Result<Vec<GraphSample>> {
    if !phi.has_subdiff() {
        return Err(Error::capability(format!(
            "graph sampling requires a subdifferential oracle on '{}'",
            phi.name
        )));
    }
    if plan.dim() != phi.n {
        return Err(Error::Dimension { expected: phi.n, got: plan.dim() });
    }
    // 1-D dual balls are intervals: |t| < r in the dual norm iff
    // |t| < r / dual_norm(e_1).
    let clamp_1d = match (phi.n, xstar_ball) {
        (1, Some((c, r))) => {
            let unit = m.dual_norm(&[1.0])?;
            Some((c[0], r / unit))
        }
        _ => None,
    };
    let mut out = Vec::new();
    for x in plan.points()? {
        if let Some((c, r)) = x_ball {
            if m.dist(&x, c)? >= r {
                continue;
            }
        }
        let fx = phi.eval(&x);
        if !fx.is_finite() {
            continue;
        }
        if let Some(cut) = value_cutoff {
            if fx >= cut {
                continue;
            }
        }
        for xstar in phi.subdiff(&x)?.enumerate(clamp_1d) {
            if let Some((c, r)) = xstar_ball {
                let d: Vec<f64> = xstar.iter().zip(c).map(|(a, b)| a - b).collect();
                if m.dual_norm(&d)? >= r {
                    continue;
                }
            }
            out.push(GraphSample { x: x.clone(), xstar, fx });
        }
    }
    Ok(out)
}

/// The attentively localized graph: all (x, x*, phi(x)) with x in the plan's
/// point stream inside U with phi(x) < phi(center) + eps, and x* enumerated
/// from the subdifferential inside V. Deterministic for a fixed plan.
pub fn graph_samples(
    phi: &FunctionModel,
    w: &Window,
    plan: &SamplePlan,
    m: &NormModel,
) -> Result<Vec<GraphSample>> {
    let f_center = phi.eval_checked(&w.center_x)?;
    if !f_center.is_finite() {
        return Err(Error::input("window center lies outside the domain"));
    }
    collect_graph(
        phi,
        plan,
        m,
        Some((&w.center_x, w.r1)),
        Some((&w.center_xstar, w.r2)),
        Some(f_center + w.eps),
    )
}
