//! Intrinsic Diophantine approximation on rational quadric hypersurfaces.
//!
//! The library works with a projective quadric X = [Q^{-1}(0)] in P^n(R)
//! cut out by an integer quadratic form Q, and provides:
//!
//! - exact algebra of quadratic forms (evaluation, inertia, kernel,
//!   hyperbolic normalization) in [`quadform`];
//! - exact enumeration of rational points on X, totally isotropic
//!   subspaces and Q-rank bounds in [`points`];
//! - the real projective metric, neighborhoods and samplers in
//!   [`geometry`];
//! - the diagonal flow g_t^x and the correspondence between rational
//!   approximation quality and norm decay along it in [`flow`];
//! - best-approximation records, Diophantine exponents, simplex-lemma
//!   verifiers and cover counting in [`approx`];
//! - the isotropic Schmidt game with an explicit deleting strategy and
//!   badly-approximable certificates in [`game`].
//!
//! Integer data is exact throughout (i64 coordinates, i128 accumulators,
//! arbitrary-precision rationals for linear algebra); real geometry is
//! f64 with documented tolerances.

pub mod approx;
pub mod flow;
pub mod game;
pub mod geometry;
pub mod linalg;
pub mod points;
pub mod quadform;

pub use approx::{ApproxRecord, ExponentEstimate};
pub use flow::{DaniConstants, FlowContext, FlowMode};
pub use game::{BaCertificate, BobStrategy, GameOutcome};
pub use geometry::RealProjectivePoint;
pub use points::{IsotropicSubspace, QRankBounds, RationalProjectivePoint};
pub use quadform::{HyperbolicBasis, Inertia, QuadraticForm};
