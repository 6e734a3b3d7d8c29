//! Exact computation of local subring/ideal zeta factors of rings L ≅ ℤ^d.
//!
//! The pipeline goes: structure constants → valuation conditions on
//! Hermite-normal-form bases → a polyhedral cone in the valuation space →
//! lattice-point generating functions → an exact rational function in
//! (p, t = p^{-s}) for every prime p at once.  A brute-force enumeration
//! oracle counts the same sublattices directly and cross-checks every
//! symbolic result; the analysis layer extracts the abscissa of
//! convergence, the pole order and a factorization into Riemann-zeta
//! factors, and the dirichlet layer expands the Euler product and checks
//! the predicted subring-growth asymptotics numerically.

pub mod analysis;
pub mod conditions;
pub mod cone;
pub mod dirichlet;
pub mod exact;
pub mod fixtures;
pub mod oracle;
pub mod rings;

pub use exact::{BivarPoly, BivariateRational, TSeries};
pub use rings::{RingKind, StructureConstants};
