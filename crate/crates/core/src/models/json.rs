//! Declarative model documents: one-dimensional piecewise polynomials
//! described in JSON, for driving the certifiers on user-supplied functions.
//!
//! Schema:
//!
//! ```json
//! {
//!   "name": "neg_square",
//!   "dim": 1,
//!   "pieces": [
//!     { "region": [-10.0, 10.0], "formula": { "poly": [0.0, 0.0, -1.0] } }
//!   ],
//!   "subdiff": [
//!     { "at": 0.0, "interval": [-1.0, 1.0] }
//!   ],
//!   "convex": false
//! }
//! ```
//!
//! `poly` lists coefficients from the constant term up. A missing `region`
//! means the whole line; outside every region the value is +infinity. At a
//! shared region boundary without an explicit override the subdifferential
//! is the interval of one-sided slopes when they are convexly ordered and
//! the two-point set otherwise (the limiting object for a piecewise-C^1
//! kink). Domain edges get the half-line rule.

use super::{FunctionModel, ModelMeta, SubdiffSet};
use crate::error::{Error, Result};
use serde::Deserialize;
use std::sync::Arc;

#[derive(Debug, Clone, Deserialize)]
pub struct ModelDoc {
    #[serde(default)]
    pub name: Option<String>,
    pub dim: usize,
    pub pieces: Vec<PieceDoc>,
    #[serde(default)]
    pub subdiff: Vec<SubdiffOverride>,
    #[serde(default)]
    pub convex: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PieceDoc {
    #[serde(default)]
    pub region: Option<[f64; 2]>,
    pub formula: FormulaDoc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaDoc {
    Poly(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
pub struct SubdiffOverride {
    pub at: f64,
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    #[serde(default)]
    pub points: Option<Vec<f64>>,
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_deriv(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, c)| acc * x + i as f64 * c)
}

#[derive(Debug, Clone)]
struct Piece {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Spec {
    pieces: Vec<Piece>,
    overrides: Vec<SubdiffOverride>,
}

impl Spec {
    fn eval(&self, x: f64) -> f64 {
        for p in &self.pieces {
            if x >= p.lo && x <= p.hi {
                return poly_eval(&p.coeffs, x);
            }
        }
        f64::INFINITY
    }

    fn subdiff(&self, x: f64) -> SubdiffSet {
        for o in &self.overrides {
            if (x - o.at).abs() <= 1e-12 {
                if let Some([lo, hi]) = o.interval {
                    return SubdiffSet::interval(lo, hi);
                }
                if let Some(pts) = &o.points {
                    return SubdiffSet::Points(pts.iter().map(|&v| vec![v]).collect());
                }
            }
        }
        let touching: Vec<&Piece> = self
            .pieces
            .iter()
            .filter(|p| x >= p.lo - 1e-12 && x <= p.hi + 1e-12)
            .collect();
        match touching.len() {
            0 => SubdiffSet::Empty,
            1 => {
                let p = touching[0];
                let d = poly_deriv(&p.coeffs, x);
                if (x - p.lo).abs() <= 1e-12 && p.lo.is_finite() {
                    SubdiffSet::interval(f64::NEG_INFINITY, d)
                } else if (x - p.hi).abs() <= 1e-12 && p.hi.is_finite() {
                    SubdiffSet::interval(d, f64::INFINITY)
                } else {
                    SubdiffSet::Point(vec![d])
                }
            }
            _ => {
                let left = touching
                    .iter()
                    .find(|p| (x - p.hi).abs() <= 1e-12)
                    .map(|p| poly_deriv(&p.coeffs, x));
                let right = touching
                    .iter()
                    .find(|p| (x - p.lo).abs() <= 1e-12)
                    .map(|p| poly_deriv(&p.coeffs, x));
                match (left, right) {
                    (Some(l), Some(r)) if l <= r => SubdiffSet::interval(l, r),
                    (Some(l), Some(r)) => SubdiffSet::Points(vec![vec![l], vec![r]]),
                    (Some(d), None) | (None, Some(d)) => SubdiffSet::Point(vec![d]),
                    (None, None) => SubdiffSet::Empty,
                }
            }
        }
    }
}

/// Build a model from a JSON document string.
pub fn model_from_json_str(s: &str) -> Result<FunctionModel> {
    let doc: ModelDoc =
        serde_json::from_str(s).map_err(|e| Error::input(format!("model JSON: {e}")))?;
    model_from_doc(doc)
}

/// Build a model from a JSON document on disk.
pub fn model_from_json_file(path: &std::path::Path) -> Result<FunctionModel> {
    let s = std::fs::read_to_string(path)
        .map_err(|e| Error::input(format!("reading {}: {e}", path.display())))?;
    model_from_json_str(&s)
}

pub fn model_from_doc(doc: ModelDoc) -> Result<FunctionModel> {
    if doc.dim != 1 {
        return Err(Error::capability("JSON model documents support dim = 1 only"));
    }
    if doc.pieces.is_empty() {
        return Err(Error::input("model document needs at least one piece"));
    }
    let mut pieces = Vec::new();
    for p in &doc.pieces {
        let (lo, hi) = match p.region {
            Some([lo, hi]) => {
                if !(lo < hi) {
                    return Err(Error::input(format!("piece region [{lo}, {hi}] is empty")));
                }
                (lo, hi)
            }
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let FormulaDoc::Poly(poly) = &p.formula;
        if poly.is_empty() || poly.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("piece polynomial needs finite coefficients"));
        }
        pieces.push(Piece { lo, hi, coeffs: poly.clone() });
    }
    let mut sorted = pieces.clone();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for w in sorted.windows(2) {
        if w[1].lo < w[0].hi - 1e-12 {
            return Err(Error::input("piece regions overlap beyond shared endpoints"));
        }
    }
    for o in &doc.subdiff {
        if o.interval.is_none() && o.points.is_none() {
            return Err(Error::input("subdiff override needs 'interval' or 'points'"));
        }
    }
    let spec = Arc::new(Spec { pieces, overrides: doc.subdiff.clone() });
    let name = doc.name.clone().unwrap_or_else(|| "json_model".into());
    let eval_spec = Arc::clone(&spec);
    let sd_spec = Arc::clone(&spec);
    Ok(FunctionModel::new(name, 1, Arc::new(move |x: &[f64]| eval_spec.eval(x[0])))
        .with_subdiff(Arc::new(move |x: &[f64]| sd_spec.subdiff(x[0])))
        .with_meta(ModelMeta {
            is_convex: doc.convex,
            prox_regular: None,
            prox_bounded: None,
            subdiff_continuous: false,
            quadratic_alpha: None,
            stress_pairs: vec![],
        }))
}
