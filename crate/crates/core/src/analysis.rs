//! Analytic invariants of a local factor: edge weights (A_k, B_k) of the
//! cone's one-dimensional rays, abscissa of convergence, pole order at
//! the abscissa, factorization into Riemann-zeta factors with a certified
//! remainder margin, and the constant-term identities.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::cone::{ComponentCounts, ConeSystem, LocalFactor};
use crate::exact::{BivarPoly, BivariateRational, TSeries};

type Q = BigRational;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("every edge has A_k = 0: the zeta function is constant")]
    ConstantZeta,
    #[error("missing component count for edge stratum {0:?}")]
    MissingCount(BTreeSet<usize>),
    #[error("leading coefficient of c_(p,I) is not a positive integer: {0}")]
    BadLeadingCoefficient(String),
}

/// Weights of one extreme ray: A_k = Σ q_kj N_j(f0),
/// B_k = Σ q_kj (N_j(g0) + ν_j).
#[derive(Clone, Debug)]
pub struct Edge {
    pub ray_index: usize,
    pub a: u64,
    pub b: u64,
    /// coordinate support of the ray = its component subset I_k
    pub support: BTreeSet<usize>,
}

impl Edge {
    pub fn in_w_prime(&self) -> bool {
        self.a != 0
    }

    /// candidate pole (1 - B_k) / A_k, defined when A_k ≠ 0
    pub fn candidate(&self) -> Option<Q> {
        if self.a == 0 {
            None
        } else {
            Some(Q::new(BigInt::from(1i64 - self.b as i64), BigInt::from(self.a)))
        }
    }
}

#[derive(Clone, Debug)]
pub struct EdgeData {
    pub edges: Vec<Edge>,
}

pub fn edge_data(cs: &ConeSystem) -> EdgeData {
    let edges = cs
        .rays
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (a, b) = cs.weights_of(r);
            let support =
                r.iter().enumerate().filter(|(_, &c)| c != 0).map(|(j, _)| j).collect();
            Edge { ray_index: i, a, b, support }
        })
        .collect();
    EdgeData { edges }
}

/// shift + max over W'-edges of (1 - B_k)/A_k.
pub fn abscissa(ed: &EdgeData, shift: i64) -> Result<Q, AnalysisError> {
    let best = ed
        .edges
        .iter()
        .filter_map(|e| e.candidate())
        .max()
        .ok_or(AnalysisError::ConstantZeta)?;
    Ok(best + Q::from_integer(BigInt::from(shift)))
}

fn maximizing_edges(ed: &EdgeData) -> Vec<&Edge> {
    let best = ed.edges.iter().filter_map(|e| e.candidate()).max();
    match best {
        None => Vec::new(),
        Some(b) => ed.edges.iter().filter(|e| e.candidate().as_ref() == Some(&b)).collect(),
    }
}

/// Pole order at the abscissa: each edge attaining the maximum
/// contributes the leading coefficient of c_{p,I_k} as a polynomial in p
/// (1 in the monomial case).  For user-supplied counts this assumes the
/// components split off generically; reports carry that caveat.
pub fn pole_order(ed: &EdgeData, counts: &ComponentCounts, t: usize) -> Result<u32, AnalysisError> {
    let maxed = maximizing_edges(ed);
    if maxed.is_empty() {
        return Err(AnalysisError::ConstantZeta);
    }
    let mut total: u32 = 0;
    for e in maxed {
        let c = counts
            .get(t, &e.support)
            .ok_or_else(|| AnalysisError::MissingCount(e.support.clone()))?;
        let lead = leading_p_coefficient(&c);
        if !lead.is_integer() || !lead.is_positive() {
            return Err(AnalysisError::BadLeadingCoefficient(lead.to_string()));
        }
        total += lead.to_integer().to_u32().unwrap_or(0);
    }
    Ok(total)
}

fn leading_p_coefficient(c: &BivarPoly) -> Q {
    let mut best: Option<(i64, Q)> = None;
    for (coeff, a, b) in c.iter_terms() {
        debug_assert_eq!(b, 0);
        if best.as_ref().map_or(true, |(ba, _)| a > *ba) {
            best = Some((a, coeff.clone()));
        }
    }
    best.map(|(_, c)| c).unwrap_or_else(Q::zero)
}

/// Summary invariants of a local factor in counting coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisResult {
    pub abscissa: Q,
    pub pole_order: u32,
    /// b = w - 1, the log exponent of the partial-sum asymptotics
    pub log_exponent: u32,
    pub shift: i64,
}

pub fn analyze(cs: &ConeSystem, counts: &ComponentCounts) -> Result<AnalysisResult, AnalysisError> {
    let ed = edge_data(cs);
    let shift = cs.data().ring_rank().map_or(0, |d| d as i64);
    let alpha = abscissa(&ed, shift)?;
    let w = pole_order(&ed, counts, cs.t)?;
    Ok(AnalysisResult { abscissa: alpha, pole_order: w, log_exponent: w - 1, shift })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PeelVerdict {
    Terminated,
    NonTerminatingAtThreshold,
}

/// Product decomposition of a local series into ∏ ζ_p(bs - a)^e retained
/// above the threshold, with the remaining log-content as a remainder.
#[derive(Clone, Debug)]
pub struct ZetaFactorization {
    /// (a, b, e) meaning ζ(bs - a)^e, sorted by (b, a)
    pub factors: Vec<(i64, u32, i64)>,
    pub remainder: TSeries,
    pub threshold: Q,
    pub verdict: PeelVerdict,
    /// non-integer Witt exponents, reported rather than fatal
    pub anomalies: Vec<String>,
}

impl ZetaFactorization {
    pub fn from_factors(factors: Vec<(i64, u32, i64)>, threshold: Q) -> Self {
        let mut factors = factors;
        factors.sort_by_key(|&(a, b, _)| (b, a));
        ZetaFactorization {
            factors,
            remainder: TSeries::one(0),
            threshold,
            verdict: PeelVerdict::Terminated,
            anomalies: Vec::new(),
        }
    }

    /// Largest (1+a)/b over retained factors with positive exponent.
    pub fn abscissa(&self) -> Option<Q> {
        self.factors
            .iter()
            .filter(|&&(_, _, e)| e > 0)
            .map(|&(a, b, _)| Q::new(BigInt::from(1 + a), BigInt::from(b)))
            .max()
    }

    /// Total multiplicity at the factor-list abscissa.
    pub fn pole_order(&self) -> u32 {
        match self.abscissa() {
            None => 0,
            Some(alpha) => self
                .factors
                .iter()
                .filter(|&&(a, b, e)| e > 0 && Q::new(BigInt::from(1 + a), BigInt::from(b)) == alpha)
                .map(|&(_, _, e)| e as u32)
                .sum(),
        }
    }

    /// The local Euler factor at p as an exact rational function in t.
    pub fn local_factor(&self, p: u64) -> crate::exact::UniRational {
        let mut num_factors: Vec<(i64, u32, u32)> = Vec::new();
        let mut den_factors: Vec<(i64, u32, u32)> = Vec::new();
        for &(a, b, e) in &self.factors {
            if e > 0 {
                den_factors.push((a, b, e as u32));
            } else {
                num_factors.push((a, b, (-e) as u32));
            }
        }
        let mut num = BivarPoly::one();
        for (a, b, e) in num_factors {
            for _ in 0..e {
                num = &num * &BivarPoly::one_minus(a, b);
            }
        }
        BivariateRational::new(num, den_factors).specialize(p)
    }
}

pub fn zeta_argument(a: i64, b: u32) -> String {
    match (b, a) {
        (1, 0) => "s".to_string(),
        (1, _) if a > 0 => format!("s - {}", a),
        (1, _) => format!("s + {}", -a),
        (_, 0) => format!("{}*s", b),
        (_, _) if a > 0 => format!("{}*s - {}", b, a),
        (_, _) => format!("{}*s + {}", b, -a),
    }
}

impl fmt::Display for ZetaFactorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rendered: Vec<String> = self
            .factors
            .iter()
            .map(|&(a, b, e)| {
                if e == 1 {
                    format!("zeta({})", zeta_argument(a, b))
                } else {
                    format!("zeta({})^{}", zeta_argument(a, b), e)
                }
            })
            .collect();
        write!(f, "{}", rendered.join(" * "))
    }
}

/// Two-variable Witt-style peeling: write log w = Σ c_n(p) t^n, strip at
/// each degree n the factors (1 - p^a t^n)^{-e(a,n)} forced by the
/// surviving coefficients, and retain those with (1+a)/n ≥ θ.  The full
/// decomposition (retained or not) feeds the recursion; only retained
/// factors are divided out of the remainder.
pub fn peel_factors(w: &TSeries, theta: &Q) -> Result<ZetaFactorization, crate::exact::SeriesError> {
    let order = w.order();
    let log = w.log()?;
    let mut exponents: Vec<(i64, u32, Q)> = Vec::new(); // full decomposition
    let mut anomalies = Vec::new();
    for n in 1..=order {
        // S_n = n c_n - Σ_{b | n, b < n} b Σ_a e(a,b) p^{(n/b) a}
        let mut s_n = log.coefficient(n).scale(&Q::from_integer(BigInt::from(n)));
        for &(a, b, ref e) in &exponents {
            if b < n && n % b == 0 {
                let power = (n / b) as i64 * a;
                let term = BivarPoly::monomial(e * Q::from_integer(BigInt::from(b)), power, 0);
                s_n = &s_n - &term;
            }
        }
        let new_exps: Vec<(i64, u32, Q)> = s_n
            .iter_terms()
            .map(|(coeff, a, _)| (a, n, coeff / Q::from_integer(BigInt::from(n))))
            .filter(|(_, _, e)| !e.is_zero())
            .collect();
        for (a, b, e) in new_exps {
            if !e.is_integer() {
                anomalies.push(format!("non-integer exponent {} for (a, b) = ({}, {})", e, a, b));
            }
            exponents.push((a, b, e));
        }
    }
    let retained: Vec<(i64, u32, i64)> = exponents
        .iter()
        .filter(|(a, b, e)| {
            e.is_integer() && Q::new(BigInt::from(1 + a), BigInt::from(*b)) >= *theta
        })
        .map(|(a, b, e)| (*a, *b, e.to_integer().to_i64().expect("small exponent")))
        .collect();
    // remainder = w · Π retained (1 - p^a t^b)^{e}
    let mut remainder = w.clone();
    for &(a, b, e) in &retained {
        if e > 0 {
            for _ in 0..e {
                remainder = remainder.mul_one_minus(a, b);
            }
        } else {
            for _ in 0..(-e) {
                remainder = remainder.mul_geometric(a, b);
            }
        }
    }
    // retained factors still appearing past half the inspected depth
    // signal an unbounded factor family (natural-boundary heuristic)
    let verdict = if retained.iter().any(|&(_, b, _)| b > order / 2) {
        PeelVerdict::NonTerminatingAtThreshold
    } else {
        PeelVerdict::Terminated
    };
    let mut factors = retained;
    factors.sort_by_key(|&(a, b, _)| (b, a));
    Ok(ZetaFactorization { factors, remainder, threshold: theta.clone(), verdict, anomalies })
}

/// Default inspection depth for the peeling: twice the lcm of the A_k
/// over the abscissa-attaining edges, capped at 24.
pub fn default_peel_order(ed: &EdgeData) -> u32 {
    let mut l: u64 = 1;
    for e in maximizing_edges(ed) {
        l = num_integer::lcm(l, e.a.max(1));
    }
    ((2 * l) as u32).clamp(2, 24)
}

/// The t-free part of a (normalized) local factor as an exact rational
/// expression in p: numerator t^0-coefficient over the surviving t-free
/// denominator factors.
pub fn constant_term(z: &BivariateRational) -> BivariateRational {
    let zn = z.normalize();
    let num = zn.numerator().t_coefficient(0);
    let den: Vec<(i64, u32, u32)> =
        zn.denominator().into_iter().filter(|&(_, b, _)| b == 0).collect();
    BivariateRational::new(num, den)
}

/// Constant-term identities for one cone system.
#[derive(Clone, Debug)]
pub struct ConstantTermReport {
    /// a_{p,0} as a rational expression in p
    pub value: BivariateRational,
    /// stratified route (sum of t-free parts over strata) agrees
    pub stratified_route_agrees: bool,
    /// for ring-derived data: a_{p,0} = (1 - p^{-1})^d symbolically
    pub ring_identity: Option<bool>,
    /// 0 < a_{p,0} ≤ 1 at p in {2, 3, 5, 7, 11}
    pub numeric_bounds_hold: bool,
}

pub fn constant_term_checks(
    cs: &ConeSystem,
    counts: &ComponentCounts,
    lf: &LocalFactor,
) -> Result<ConstantTermReport, crate::cone::ConeError> {
    let direct = constant_term(&lf.z);
    // stratified route: Σ_I scalar_I · (t-free part of G_I)
    let t = cs.t;
    let all: BTreeSet<usize> = (0..t).collect();
    let mut total = BivariateRational::zero();
    for stratum in crate::cone::subsets(&all) {
        let c = match counts.get(t, &stratum) {
            Some(c) => c,
            None => {
                if cs.stratum_nonempty(&stratum) {
                    return Err(crate::cone::ConeError::MissingComponentCount(stratum));
                }
                continue;
            }
        };
        let scalar = &c.mul_monomial(-((cs.ambient - stratum.len()) as i64), 0)
            * &BivarPoly::one_minus(-1, 0).pow(stratum.len() as u32);
        let g_i = cs.stratum_genfun(&stratum);
        let tfree = constant_term(&g_i);
        total = total.add(&tfree.mul_poly(&scalar));
    }
    let stratified_route_agrees = total.eq_as_function(&direct);
    let ring_identity = cs.data().ring_rank().map(|d| {
        let expected = BivariateRational::from_poly(BivarPoly::one_minus(-1, 0).pow(d as u32));
        direct.eq_as_function(&expected)
    });
    let mut numeric_bounds_hold = true;
    for p in [2u64, 3, 5, 7, 11] {
        let u = direct.specialize(p);
        let series = u.series(0);
        let v = &series[0];
        if !v.is_positive() || v > &Q::one() {
            numeric_bounds_hold = false;
        }
    }
    Ok(ConstantTermReport { value: direct, stratified_route_agrees, ring_identity, numeric_bounds_hold })
}

/// Sum of c_{p,I} over subsets of the f0-free components; for
/// ring-derived monomial data this must equal p^{m-d} (p-1)^d.
pub fn component_count_identity(cs: &ConeSystem, counts: &ComponentCounts) -> Option<bool> {
    let d = cs.data().ring_rank()?;
    let t = cs.t;
    let t0_complement: BTreeSet<usize> = (0..t).filter(|&j| cs.weight_t[j] == 0).collect();
    let mut sum = BivarPoly::zero();
    for subset in crate::cone::subsets(&t0_complement) {
        match counts.get(t, &subset) {
            Some(c) => sum = &sum + &c,
            None => return Some(false),
        }
    }
    let mut pm1 = BivarPoly::monomial(Q::one(), 1, 0);
    pm1.add_term(-Q::one(), 0, 0);
    let expected =
        &BivarPoly::monomial(Q::one(), (cs.ambient - d) as i64, 0) * &pm1.pow(d as u32);
    Some(sum == expected)
}

/// Every denominator factor of the normalized local integral corresponds
/// to the weights (A_j, B_j) of some ray.
pub fn denominators_match_edges(z: &BivariateRational, ed: &EdgeData) -> bool {
    z.normalize().denominator().iter().all(|&(a, b, _)| {
        if b == 0 {
            // unit content in p alone, not a pole in t
            return true;
        }
        ed.edges.iter().any(|e| e.a == b as u64 && e.b == (-a) as u64)
    })
}

/// The strict inequality that keeps higher-dimensional pieces away from
/// the abscissa: every decomposition piece on ≥ 2 rays with ΣA > 0 has
/// (1 - ΣB)/(ΣA) < max over its W'-rays of (1 - B_j)/A_j.
pub fn multiray_pieces_below_abscissa(cs: &ConeSystem) -> bool {
    let ed = edge_data(cs);
    for piece in cs.full_decomposition() {
        if piece.ray_indices.len() < 2 {
            continue;
        }
        let edges: Vec<&Edge> = piece.ray_indices.iter().map(|&i| &ed.edges[i]).collect();
        let sum_a: u64 = edges.iter().map(|e| e.a).sum();
        if sum_a == 0 {
            continue;
        }
        let sum_b: u64 = edges.iter().map(|e| e.b).sum();
        let combined = Q::new(BigInt::from(1i64 - sum_b as i64), BigInt::from(sum_a));
        match edges.iter().filter_map(|e| e.candidate()).max() {
            None => return false,
            Some(best) => {
                if combined >= best {
                    return false;
                }
            }
        }
    }
    true
}
