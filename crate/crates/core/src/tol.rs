//! Centralized numeric tolerances with the rationale for each choice.
//!
//! Every certifier verdict in this crate is a statement about finitely many
//! samples compared at a tolerance. The tolerances are grouped here so that a
//! verdict can always be traced to an explicit, documented threshold instead
//! of a magic number buried in a loop.

/// Identities that hold in exact arithmetic (duality-map equalities, closed
/// forms): only f64 rounding may intervene.
pub const EXACT_TOL: f64 = 1e-12;

/// Duality-map identity checks over random vectors; scaled by (1 + ||x||^2)
/// at the call site to stay meaningful for large inputs.
pub const DUALITY_TOL: f64 = 1e-10;

/// Staged global minimization: accepted gap between the reported envelope
/// value and the true minimum on the search box.
pub const VALUE_TOL: f64 = 1e-8;

/// Default slack tolerance for certificate inequalities. Inequality slacks
/// combine two or three staged minimizations, so this sits two orders above
/// VALUE_TOL.
pub const CERT_TOL: f64 = 1e-6;

/// Minimizer points closer than this merge into one cluster.
pub const CLUSTER_MERGE: f64 = 1e-6;

/// A prox/argmin result counts as single-valued when its cluster diameter
/// stays below this.
pub const CLUSTER_SINGLE: f64 = 1e-5;

/// Smallest coordinate-descent step in the refinement stage of the staged
/// search; bounds the geometric resolution of reported minimizers.
pub const REFINE_STEP_MIN: f64 = 1e-8;

/// Extra slack per unit radius in the shrinking-scale regular-subgradient
/// test: smooth pieces contribute curvature O(rho) to the difference
/// quotient, so the per-scale tolerance is BASE + CURVATURE_ALLOWANCE * rho.
pub const CURVATURE_ALLOWANCE: f64 = 8.0;

/// Largest dyadic prox-regularity parameter tried before refuting:
/// r in {0, 1, 2, 4, ..., R_MAX}.
pub const R_MAX: f64 = 1024.0;

/// Finite-sequence surrogate tolerance for epi-convergence and argmin-limsup
/// checks: absorbs the O(1/K) truncation error of tails cut at K terms.
pub const EPI_TOL: f64 = 1e-3;

/// Distance tolerance for argmin accumulation checks (same O(1/K) origin).
pub const DIST_TOL: f64 = 1e-3;

/// Cap on enumerated sample pairs in gap scans; beyond it a seeded
/// subsample keeps cost bounded and runs reproducible.
pub const PAIR_CAP: usize = 100_000;

/// Salt mixed into the plan seed for pair subsampling so the pair stream is
/// independent of the point stream drawn from the same plan.
pub const PAIR_SALT: u64 = 0x5EED;
