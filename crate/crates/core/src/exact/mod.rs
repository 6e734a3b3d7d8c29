//! Exact arithmetic kernel: Laurent polynomials and rational functions in
//! (p, t), and truncated power series in t with Laurent-polynomial
//! coefficients in p.
//!
//! The variable t stands for p^{-s} throughout, so a monomial p^a t^b
//! represents p^{a - bs}.  All coefficients are exact rationals.

mod poly;
mod rational;
mod series;

pub use poly::BivarPoly;
pub use rational::{BivariateRational, DenomFactor, UniRational};
pub use series::{SeriesError, TSeries};

