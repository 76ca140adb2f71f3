//! Desk-scale numerical certification for variational analysis on
//! finite-dimensional weighted l^p models.
//!
//! The crate evaluates Moreau envelopes, proximal and duality mappings, and
//! runs sample-based certifiers — each emitting a [`report::CertificateReport`]
//! with a margin and worst-case witnesses — for:
//!
//! * variational convexity and its strong (modulus sigma) form, including a
//!   modulus search and a tangent-hull reconstruction with two-directional
//!   graph agreement ([`varconvex`]);
//! * prox-regularity, regular/proximal subgradient membership, and
//!   subdifferential continuity ([`regularity`]);
//! * local monotonicity and strong monotonicity of subgradient graphs, plus
//!   a resolvent single-valuedness/Lipschitz probe ([`monotonicity`]);
//! * positive-semidefiniteness of sampled second-order subdifferentials and
//!   point-based positivity ([`second_order`]);
//! * tilt stability with a sampled Lipschitz modulus, and quadratic growth
//!   along localized subgradient graphs ([`tilt`]);
//! * epigraphical convergence diagnostics for envelope families
//!   ([`models::epi`]).
//!
//! Every certifier reads its sampling from an explicit [`plan::SamplePlan`]
//! (seeded grid + quasi-random points), so runs are deterministic and
//! thread-count independent. "CERTIFIED_ON_SAMPLES" is exactly that: the
//! inequalities held on the sampled sets at the stated tolerance — it is
//! evidence, not proof. Refutations, by contrast, carry concrete witnesses.

pub mod envelope;
pub mod error;
pub mod minimize;
pub mod models;
pub mod monotonicity;
pub mod norm_space;
pub mod plan;
pub mod regularity;
pub mod report;
pub mod second_order;
pub mod tilt;
pub mod tol;
pub mod varconvex;

pub use error::{Error, Result};
