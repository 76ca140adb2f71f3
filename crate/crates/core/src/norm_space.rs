//! Weighted l^p geometry on R^n: norm, single-valued duality mapping, its
//! inverse, the Lyapunov functional, and empirical modulus constants.
//!
//! The pairing between vectors and covectors is always the standard dot
//! product; weights enter only through norms. Exponents are restricted to
//! p in (1, inf) so the duality mapping stays single-valued.

use crate::error::{check_dim, Error, Result};
use crate::plan::SamplePlan;
use serde::{Deserialize, Serialize};

/// A weighted l^p norm structure on R^n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormModel {
    pub p: f64,
    pub n: usize,
    pub weights: Vec<f64>,
}

impl NormModel {
    /// Unweighted l^p on R^n.
    pub fn lp(p: f64, n: usize) -> Result<Self> {
        Self::weighted(p, n, vec![1.0; n])
    }

    /// Euclidean space R^n.
    pub fn euclidean(n: usize) -> Self {
        Self::lp(2.0, n).expect("p=2 is always valid")
    }

    pub fn weighted(p: f64, n: usize, weights: Vec<f64>) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::input(format!(
                "exponent p={p} outside (1, inf): the duality mapping would be set-valued"
            )));
        }
        if n == 0 {
            return Err(Error::input("dimension must be positive"));
        }
        if weights.len() != n {
            return Err(Error::Dimension { expected: n, got: weights.len() });
        }
        if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::input("weights must be strictly positive"));
        }
        let q = p / (p - 1.0);
        debug_assert!((1.0 / p + 1.0 / q - 1.0).abs() < 1e-14);
        Ok(NormModel { p, n, weights })
    }

    /// Conjugate exponent q = p/(p-1).
    pub fn dual_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// The conjugate space: exponent q, weights w^(1-q). The duality map of
    /// the dual model inverts this model's duality map.
    pub fn dual(&self) -> NormModel {
        let q = self.dual_exponent();
        let weights = self.weights.iter().map(|w| w.powf(1.0 - q)).collect();
        NormModel { p: q, n: self.n, weights }
    }

    /// True for unweighted p=2, the Hilbert case gating the paper-exact
    /// identities.
    pub fn is_euclidean(&self) -> bool {
        self.p == 2.0 && self.weights.iter().all(|w| *w == 1.0)
    }

    /// (sum_i w_i |x_i|^p)^(1/p).
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n, x)?;
        if self.p == 2.0 {
            return Ok(self.norm_sq_p2(x).sqrt());
        }
        let s: f64 = x.iter().zip(&self.weights).map(|(xi, w)| w * xi.abs().powf(self.p)).sum();
        Ok(s.powf(1.0 / self.p))
    }

    /// ||x||^2; at p=2 computed as the plain weighted square sum so that
    /// Hilbert identities hold to the last bit.
    pub fn norm_sq(&self, x: &[f64]) -> Result<f64> {
        if self.p == 2.0 {
            check_dim(self.n, x)?;
            Ok(self.norm_sq_p2(x))
        } else {
            let v = self.norm(x)?;
            Ok(v * v)
        }
    }

    fn norm_sq_p2(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.weights).map(|(xi, w)| w * xi * xi).sum()
    }

    /// Norm of the difference x - y.
    pub fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.n, x)?;
        check_dim(self.n, y)?;
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.norm(&d)
    }

    /// Dual norm of a covector (the norm of the conjugate space).
    pub fn dual_norm(&self, xstar: &[f64]) -> Result<f64> {
        self.dual().norm(xstar)
    }

    /// The duality mapping J(x)_i = ||x||^(2-p) w_i |x_i|^(p-1) sign(x_i),
    /// the unique covector with <J(x), x> = ||x||^2 and ||J(x)||_dual = ||x||.
    pub fn duality_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x)?;
        if self.p == 2.0 {
            return Ok(x.iter().zip(&self.weights).map(|(xi, w)| w * xi).collect());
        }
        let nx = self.norm(x)?;
        if nx == 0.0 {
            return Ok(vec![0.0; self.n]);
        }
        let scale = nx.powf(2.0 - self.p);
        Ok(x
            .iter()
            .zip(&self.weights)
            .map(|(xi, w)| scale * w * xi.abs().powf(self.p - 1.0) * xi.signum())
            .collect())
    }

    /// Duality map of the conjugate space; inverts `duality_map`.
    pub fn inverse_duality_map(&self, xstar: &[f64]) -> Result<Vec<f64>> {
        self.dual().duality_map(xstar)
    }

    /// Lyapunov functional L(u, x) = ||u||^2 - 2<J(u), x> + ||x||^2;
    /// nonnegative, zero at u = x, equals ||u - x||^2 in the Hilbert case.
    pub fn lyapunov(&self, u: &[f64], x: &[f64]) -> Result<f64> {
        let ju = self.duality_map(u)?;
        Ok(self.norm_sq(u)? - 2.0 * dot(&ju, x) + self.norm_sq(x)?)
    }
}

/// Standard pairing <a, b> = sum a_i b_i.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Norm evaluation for checks that need only norm values, not a duality map.
/// The weighted-l1 variant serves the discretized integral models whose
/// natural norm has exponent 1 (outside `NormModel`'s p > 1 contract).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormEval {
    Lp(NormModel),
    WeightedL1 { weights: Vec<f64> },
}

impl NormEval {
    pub fn lp(m: NormModel) -> Self {
        NormEval::Lp(m)
    }

    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::input("weighted_l1 weights must be nonempty and strictly positive"));
        }
        Ok(NormEval::WeightedL1 { weights })
    }

    pub fn dim(&self) -> usize {
        match self {
            NormEval::Lp(m) => m.n,
            NormEval::WeightedL1 { weights } => weights.len(),
        }
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        match self {
            NormEval::Lp(m) => m.norm(x),
            NormEval::WeightedL1 { weights } => {
                check_dim(weights.len(), x)?;
                Ok(x.iter().zip(weights).map(|(xi, w)| w * xi.abs()).sum())
            }
        }
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.norm(&d)
    }
}

/// Result of the empirical strong-monotonicity modulus scan.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusEstimate {
    /// min over sampled pairs of <J(x)-J(y), x-y> / ||x-y||^2.
    pub value: f64,
    /// The pair attaining the minimum.
    pub witness: (Vec<f64>, Vec<f64>),
    pub pairs_tested: usize,
}

/// Empirical lower modulus c1 of the duality map: the minimum over sampled
/// pairs of <J(x)-J(y), x-y> / ||x-y||^2. Exactly 1 at p=2; an upper
/// estimate of the true modulus elsewhere (it can approach 0 for p > 2).
pub fn estimate_strong_mono_modulus(m: &NormModel, plan: &SamplePlan) -> Result<ModulusEstimate> {
    if plan.dim() != m.n {
        return Err(Error::Dimension { expected: m.n, got: plan.dim() });
    }
    let points = plan.points()?;
    let pairs = plan.pair_indices(points.len());
    if pairs.len() < 100 {
        return Err(Error::input(format!(
            "plan yields only {} pairs; at least 100 required",
            pairs.len()
        )));
    }
    let jmaps: Vec<Vec<f64>> = points.iter().map(|x| m.duality_map(x)).collect::<Result<_>>()?;
    let mut best: Option<(f64, usize, usize)> = None;
    let mut tested = 0usize;
    for &(i, j) in &pairs {
        let d: Vec<f64> = points[i].iter().zip(&points[j]).map(|(a, b)| a - b).collect();
        let den = m.norm_sq(&d)?;
        if den == 0.0 {
            continue;
        }
        let jd: Vec<f64> = jmaps[i].iter().zip(&jmaps[j]).map(|(a, b)| a - b).collect();
        let ratio = dot(&jd, &d) / den;
        tested += 1;
        if best.map_or(true, |(b, _, _)| ratio < b) {
            best = Some((ratio, i, j));
        }
    }
    let (value, i, j) = best.ok_or_else(|| Error::input("no distinct pairs in sample plan"))?;
    Ok(ModulusEstimate {
        value,
        witness: (points[i].clone(), points[j].clone()),
        pairs_tested: tested,
    })
}
