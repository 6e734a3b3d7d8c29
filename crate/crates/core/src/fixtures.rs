//! Known closed-form factorizations of the built-in rings, entered as
//! fixtures for cross-checking — these are reference values, not outputs
//! of the pipeline.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::analysis::ZetaFactorization;
use crate::dirichlet::FixtureSource;
use crate::exact::UniRational;

/// ζ_{Z^d}(s) = ζ(s) ζ(s-1) ⋯ ζ(s-d+1).
pub fn zd_factors(d: usize) -> ZetaFactorization {
    ZetaFactorization::from_factors(
        (0..d as i64).map(|i| (i, 1, 1)).collect(),
        BigRational::zero(),
    )
}

/// Subring zeta function of the Heisenberg ring:
/// ζ(s) ζ(s-1) ζ(2s-2) ζ(2s-3) ζ(3s-3)^{-1}.
pub fn heisenberg_subring_factors() -> ZetaFactorization {
    ZetaFactorization::from_factors(
        vec![(0, 1, 1), (1, 1, 1), (2, 2, 1), (3, 2, 1), (3, 3, -1)],
        BigRational::zero(),
    )
}

/// Subalgebra zeta function of sl2:
/// ζ(s) ζ(s-1) ζ(2s-2) ζ(2s-1) ζ(3s-1)^{-1} times a correction at p = 2.
/// The local factor at the bad prime is
/// (1 + 6·2^{-2s} - 8·2^{-3s}) / ((1-t)(1-2t)(1-4t²)(1-2t²)).
pub fn sl2_subring_fixture() -> FixtureSource {
    let factors = ZetaFactorization::from_factors(
        vec![(0, 1, 1), (1, 1, 1), (2, 2, 1), (1, 2, 1), (1, 3, -1)],
        BigRational::zero(),
    );
    let q = |n: i64| BigRational::from_integer(BigInt::from(n));
    let mut num = BTreeMap::new();
    num.insert(0u32, q(1));
    num.insert(2u32, q(6));
    num.insert(3u32, q(-8));
    let bad2 = UniRational::from_factors(
        num,
        vec![(q(1), 1, 1), (q(2), 1, 1), (q(4), 2, 1), (q(2), 2, 1)],
    );
    let mut overrides = BTreeMap::new();
    overrides.insert(2u64, bad2);
    FixtureSource { factors, overrides }
}
