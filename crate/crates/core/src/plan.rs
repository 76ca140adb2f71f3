//! Deterministic sampling plans: axis grids, Halton low-discrepancy points,
//! seeded random streams, and capped pair enumeration.
//!
//! Identical plans produce byte-identical sample streams; every consumer of
//! randomness in the crate derives its generator from a plan seed.

use crate::error::{Error, Result};
use crate::tol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// A reproducible sampling recipe over an axis-aligned box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplePlan {
    pub seed: u64,
    pub grid_per_axis: usize,
    pub qmc_points: usize,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
}

/// Full axis grids above this many points are refused; use QMC instead.
const GRID_CAP: usize = 5_000_000;

impl SamplePlan {
    pub fn new(seed: u64, grid_per_axis: usize, qmc_points: usize, box_lo: Vec<f64>, box_hi: Vec<f64>) -> Result<Self> {
        let plan = SamplePlan { seed, grid_per_axis, qmc_points, box_lo, box_hi };
        plan.validate()?;
        Ok(plan)
    }

    /// 1-D convenience constructor.
    pub fn line(seed: u64, grid_per_axis: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(seed, grid_per_axis, 0, vec![lo], vec![hi])
    }

    /// Box centered at `center` with half-width `half` on every axis.
    pub fn centered(seed: u64, grid_per_axis: usize, qmc_points: usize, center: &[f64], half: f64) -> Result<Self> {
        let lo = center.iter().map(|c| c - half).collect();
        let hi = center.iter().map(|c| c + half).collect();
        Self::new(seed, grid_per_axis, qmc_points, lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.box_lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.box_lo
            .iter()
            .zip(&self.box_hi)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.box_lo.len() != self.box_hi.len() || self.box_lo.is_empty() {
            return Err(Error::input("sample plan box bounds must be nonempty and of equal length"));
        }
        for (lo, hi) in self.box_lo.iter().zip(&self.box_hi) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::input("sample plan box bounds must be finite with lo <= hi"));
            }
        }
        Ok(())
    }

    /// Seeded generator for this plan. A fixed `stream` tag lets independent
    /// consumers of the same plan draw non-overlapping streams.
    pub fn rng(&self, stream: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.seed ^ stream.rotate_left(17))
    }

    /// Full cartesian axis grid, endpoints included. Refused when the total
    /// point count would exceed the grid cap (high dimensions use `qmc`).
    pub fn grid(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        if self.grid_per_axis == 0 {
            return Ok(Vec::new());
        }
        let total = (self.grid_per_axis as f64).powi(n as i32);
        if total > GRID_CAP as f64 {
            return Err(Error::capability(format!(
                "grid of {}^{} points exceeds the {} cap; use qmc_points for this dimension",
                self.grid_per_axis, n, GRID_CAP
            )));
        }
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| linspace(self.box_lo[i], self.box_hi[i], self.grid_per_axis))
            .collect();
        let mut out = Vec::with_capacity(total as usize);
        let mut idx = vec![0usize; n];
        loop {
            out.push((0..n).map(|i| axes[i][idx[i]]).collect());
            let mut axis = 0;
            loop {
                idx[axis] += 1;
                if idx[axis] < self.grid_per_axis {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
                if axis == n {
                    return Ok(out);
                }
            }
        }
    }

    /// Halton low-discrepancy points scaled into the box.
    pub fn qmc(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let bases = first_primes(n);
        (0..self.qmc_points)
            .map(|i| {
                (0..n)
                    .map(|d| {
                        let u = radical_inverse(i as u64 + 1, bases[d]);
                        self.box_lo[d] + u * (self.box_hi[d] - self.box_lo[d])
                    })
                    .collect()
            })
            .collect()
    }

    /// Grid points followed by QMC points: the plan's full point stream.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        let mut pts = self.grid()?;
        pts.extend(self.qmc());
        Ok(pts)
    }

    /// Unordered index pairs over `n_items` items; exhaustive below the pair
    /// cap, seeded subsample of exactly the cap size above it.
    pub fn pair_indices(&self, n_items: usize) -> Vec<(usize, usize)> {
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
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed ^ tol::PAIR_SALT);
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

    /// Same plan with the box grown by `factor` about its center; used by the
    /// unboundedness probes that double the search box.
    pub fn scaled_box(&self, factor: f64) -> SamplePlan {
        let mut plan = self.clone();
        for i in 0..self.dim() {
            let c = 0.5 * (self.box_lo[i] + self.box_hi[i]);
            let h = 0.5 * (self.box_hi[i] - self.box_lo[i]) * factor;
            plan.box_lo[i] = c - h;
            plan.box_hi[i] = c + h;
        }
        plan
    }
}

/// `count` evenly spaced values covering [lo, hi], endpoints included.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count).map(|i| lo + step * i as f64).collect()
        }
    }
}

/// How many halvings the dyadic rays of [`ball_points`] descend through.
const RAY_DEPTH: u32 = 40;

/// Sample points of the closed Euclidean ball of the given radius around
/// `center`: the grid/QMC points of a centered box plan (filtered to the
/// ball), plus dyadic axis rays `center ± radius·2^-j·e_i` for
/// `j = 0..=40`. The rays give geometric resolution toward the center, which
/// difference-quotient and quadratic-minorant probes need; a uniform grid
/// alone would miss violations concentrated at vanishing distance.
pub fn ball_points(plan: &SamplePlan, center: &[f64], radius: f64) -> Result<Vec<Vec<f64>>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::input("ball radius must be finite and positive"));
    }
    let n = center.len();
    let boxed = SamplePlan::centered(plan.seed, plan.grid_per_axis, plan.qmc_points, center, radius)?;
    let mut pts: Vec<Vec<f64>> = boxed
        .points()?
        .into_iter()
        .filter(|p| {
            let d2: f64 = p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
            d2 <= radius * radius * (1.0 + 1e-12)
        })
        .collect();
    for axis in 0..n {
        for j in 0..=RAY_DEPTH {
            let step = radius * 0.5f64.powi(j as i32);
            for sign in [1.0, -1.0] {
                let mut p = center.to_vec();
                p[axis] += sign * step;
                pts.push(p);
            }
        }
    }
    Ok(pts)
}

/// Van der Corput radical inverse of `i` in the given base.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * scale;
        i /= base;
        scale *= inv;
    }
    out
}

/// First `n` primes (Halton bases); trial division is ample at this scale.
fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut cand = 2u64;
    while primes.len() < n {
        if primes.iter().take_while(|p| *p * *p <= cand).all(|p| cand % p != 0) {
            primes.push(cand);
        }
        cand += 1;
    }
    primes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_box_endpoints() {
        let plan = SamplePlan::new(7, 3, 0, vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let g = plan.grid().unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.contains(&vec![-1.0, 0.0]));
        assert!(g.contains(&vec![1.0, 2.0]));
        assert!(g.contains(&vec![0.0, 1.0]));
    }

    #[test]
    fn qmc_is_deterministic_and_in_box() {
        let plan = SamplePlan::new(7, 0, 100, vec![-2.0], vec![3.0]).unwrap();
        let a = plan.qmc();
        let b = plan.qmc();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p[0] >= -2.0 && p[0] <= 3.0));
        // base-2 radical inverse of 1 is 0.5
        assert!((a[0][0] - (-2.0 + 0.5 * 5.0)).abs() < 1e-15);
    }

    #[test]
    fn pair_indices_cap_and_determinism() {
        let plan = SamplePlan::line(42, 10, 0.0, 1.0).unwrap();
        assert_eq!(plan.pair_indices(4), vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let big = plan.pair_indices(1000);
        assert_eq!(big.len(), crate::tol::PAIR_CAP);
        assert_eq!(big, plan.pair_indices(1000));
        assert!(big.iter().all(|&(i, j)| i < j && j < 1000));
    }

    #[test]
    fn primes_start_correctly() {
        assert_eq!(first_primes(6), vec![2, 3, 5, 7, 11, 13]);
    }

    #[test]
    fn oversized_grid_is_refused() {
        let plan = SamplePlan::new(1, 100, 0, vec![0.0; 5], vec![1.0; 5]).unwrap();
        assert!(plan.grid().is_err());
    }
}
