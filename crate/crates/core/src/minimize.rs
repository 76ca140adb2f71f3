//! Derivative-free staged global minimization over a box.
//!
//! Strategy: coarse grid + QMC sweep, then coordinate descent with halving
//! steps from every near-incumbent cell, then clustering of the refined
//! points. The objective may be nonconvex, nonsmooth, and extended-real
//! (+inf outside its domain), so nothing here assumes derivatives.
//! Parallel evaluation reduces by (value, point-index) so results do not
//! depend on thread count.

use crate::error::Result;
use crate::plan::SamplePlan;
use crate::report::{json_num, json_vec};
use crate::tol::{CLUSTER_MERGE, CLUSTER_SINGLE, REFINE_STEP_MIN, VALUE_TOL};
use rayon::prelude::*;
use serde_json::Value;

/// How far above the incumbent a coarse cell may sit and still be refined.
const CANDIDATE_BAND: f64 = 10.0 * VALUE_TOL;
/// Extra best cells refined even when outside the band (nonconvex safety).
const EXTRA_CANDIDATES: usize = 8;
/// Hard cap on coordinate-descent sweeps per candidate.
const MAX_SWEEPS: usize = 10_000;
/// Unboundedness rule: the box doubles this many times and the coarse min
/// must drop by more than `UNBOUNDED_DROP` at each doubling.
const UNBOUNDED_DOUBLINGS: usize = 3;
const UNBOUNDED_DROP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub grid_stage_min: f64,
    pub refine_iterations: usize,
    pub converged: bool,
    pub boundary_hit: bool,
    pub evaluations: usize,
}

/// Result of a staged minimization; doubles as the envelope/prox output.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    /// The certified minimum over the box; -inf when the unboundedness
    /// probe fires, +inf when the box misses the domain entirely.
    pub value: f64,
    /// Cluster representatives of all points within value_tol of the
    /// minimum, lexicographically sorted.
    pub minimizers: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl EnvelopeResult {
    /// Largest pairwise distance between listed minimizers.
    pub fn cluster_diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.minimizers.len() {
            for j in (i + 1)..self.minimizers.len() {
                let dij = self.minimizers[i]
                    .iter()
                    .zip(&self.minimizers[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                d = d.max(dij);
            }
        }
        d
    }

    pub fn is_single_valued(&self) -> bool {
        self.minimizers.len() == 1
            || (!self.minimizers.is_empty() && self.cluster_diameter() <= CLUSTER_SINGLE)
    }

    pub fn single_point(&self) -> Option<&Vec<f64>> {
        if self.is_single_valued() {
            self.minimizers.first()
        } else {
            None
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "value": json_num(self.value),
            "minimizers": Value::Array(self.minimizers.iter().map(|m| json_vec(m)).collect()),
            "diagnostics": {
                "grid_stage_min": json_num(self.diagnostics.grid_stage_min),
                "refine_iterations": self.diagnostics.refine_iterations,
                "converged": self.diagnostics.converged,
                "boundary_hit": self.diagnostics.boundary_hit,
                "evaluations": self.diagnostics.evaluations,
            },
        })
    }
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Coarse stage only: minimum value and argmin over the plan's point stream.
/// Deterministic under parallelism (ties break on the point index).
pub fn coarse_argmin<F>(f: &F, plan: &SamplePlan) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let points = plan.points()?;
    let best = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| (finite_or_inf(f(x)), i))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let arg = if best.1 == usize::MAX {
        plan.center()
    } else {
        points[best.1].clone()
    };
    Ok((best.0, arg))
}

/// Coordinate descent with halving steps, clamped to the plan box.
fn refine<F>(f: &F, plan: &SamplePlan, start: &[f64], step0: &[f64]) -> (Vec<f64>, f64, usize, bool)
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let mut x = start.to_vec();
    let mut fx = finite_or_inf(f(&x));
    let mut steps = step0.to_vec();
    let mut sweeps = 0usize;
    let n = x.len();
    while steps.iter().cloned().fold(f64::NEG_INFINITY, f64::max) >= REFINE_STEP_MIN {
        if sweeps >= MAX_SWEEPS {
            return (x, fx, sweeps, false);
        }
        sweeps += 1;
        let mut improved = false;
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] = (y[i] + sign * steps[i]).clamp(plan.box_lo[i], plan.box_hi[i]);
                let fy = finite_or_inf(f(&y));
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in steps.iter_mut() {
                *s *= 0.5;
            }
        }
    }
    (x, fx, sweeps, true)
}

/// Full staged minimization over the plan box.
pub fn staged_min<F>(f: &F, plan: &SamplePlan) -> Result<EnvelopeResult>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let points = plan.points()?;
    let values: Vec<f64> = points.par_iter().map(|x| finite_or_inf(f(x))).collect();
    let evaluations = values.len();
    let grid_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !grid_min.is_finite() {
        // the box misses the domain
        return Ok(EnvelopeResult {
            value: f64::INFINITY,
            minimizers: Vec::new(),
            diagnostics: Diagnostics {
                grid_stage_min: grid_min,
                refine_iterations: 0,
                converged: false,
                boundary_hit: false,
                evaluations,
            },
        });
    }

    // refinement candidates: the near-incumbent band plus the best few cells
    let mut order: Vec<usize> = (0..points.len()).filter(|&i| values[i].is_finite()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut candidates: Vec<usize> = order
        .iter()
        .cloned()
        .filter(|&i| values[i] <= grid_min + CANDIDATE_BAND)
        .collect();
    for &i in order.iter().take(EXTRA_CANDIDATES) {
        if !candidates.contains(&i) {
            candidates.push(i);
        }
    }

    let step0: Vec<f64> = plan
        .box_lo
        .iter()
        .zip(&plan.box_hi)
        .map(|(lo, hi)| {
            let w = hi - lo;
            if plan.grid_per_axis > 1 {
                w / (plan.grid_per_axis as f64 - 1.0)
            } else {
                w / 4.0
            }
        })
        .collect();

    let refined: Vec<(Vec<f64>, f64, usize, bool)> = candidates
        .par_iter()
        .map(|&i| refine(f, plan, &points[i], &step0))
        .collect();

    let mut iterations = 0usize;
    let mut converged = true;
    let mut vmin = f64::INFINITY;
    for (_, fv, sw, conv) in &refined {
        iterations += sw;
        converged &= conv;
        vmin = vmin.min(*fv);
    }

    // cluster the near-optimal refined points
    let mut near: Vec<(Vec<f64>, f64)> = refined
        .into_iter()
        .filter(|(_, fv, _, _)| *fv <= vmin + VALUE_TOL)
        .map(|(x, fv, _, _)| (x, fv))
        .collect();
    near.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| {
        if lex_less(&a.0, &b.0) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    }));
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for (x, _) in &near {
        let dup = reps.iter().any(|r| {
            r.iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                <= CLUSTER_MERGE
        });
        if !dup {
            reps.push(x.clone());
        }
    }
    reps.sort_by(|a, b| {
        if lex_less(a, b) {
            std::cmp::Ordering::Less
        } else if lex_less(b, a) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });

    let boundary_hit = reps.iter().any(|r| {
        r.iter().zip(plan.box_lo.iter().zip(&plan.box_hi)).any(|(xi, (lo, hi))| {
            let tol = (hi - lo).abs().max(1.0) * 1e-7;
            (xi - lo).abs() <= tol || (hi - xi).abs() <= tol
        })
    });

    Ok(EnvelopeResult {
        value: vmin,
        minimizers: reps,
        diagnostics: Diagnostics {
            grid_stage_min: grid_min,
            refine_iterations: iterations,
            converged,
            boundary_hit,
            evaluations: evaluations + iterations,
        },
    })
}

/// The bare unboundedness probe: starting from this plan's box, double it
/// three times; report true (unbounded below) when the coarse minimum drops
/// by more than 10 at every doubling.
pub fn divergence_probe<F>(f: &F, plan: &SamplePlan) -> Result<bool>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let (mut prev, _) = coarse_argmin(f, plan)?;
    for k in 1..=UNBOUNDED_DOUBLINGS {
        let grown = plan.scaled_box(f64::powi(2.0, k as i32));
        let (v, _) = coarse_argmin(f, &grown)?;
        if !(v < prev - UNBOUNDED_DROP) {
            return Ok(false);
        }
        prev = v;
    }
    Ok(true)
}

/// Staged minimization plus the unboundedness probe: the box doubles three
/// times and if the coarse minimum drops by more than 10 at every doubling
/// the objective is declared unbounded below (value -inf, no minimizers).
pub fn staged_min_probed<F>(f: &F, plan: &SamplePlan) -> Result<EnvelopeResult>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let base = staged_min(f, plan)?;
    if divergence_probe(f, plan)? {
        return Ok(EnvelopeResult {
            value: f64::NEG_INFINITY,
            minimizers: Vec::new(),
            diagnostics: Diagnostics {
                grid_stage_min: base.diagnostics.grid_stage_min,
                refine_iterations: base.diagnostics.refine_iterations,
                converged: false,
                boundary_hit: true,
                evaluations: base.diagnostics.evaluations,
            },
        });
    }
    Ok(base)
}
