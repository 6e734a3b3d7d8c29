use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

/// Laurent polynomial in p and ordinary polynomial in t, with exact
/// rational coefficients.  Zero coefficients are never stored; terms are
/// kept sorted by (t-exponent, p-exponent).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BivarPoly {
    // key = (t exponent, p exponent)
    terms: BTreeMap<(u32, i64), Q>,
}

impl BivarPoly {
    pub fn zero() -> Self {
        BivarPoly::default()
    }

    pub fn one() -> Self {
        BivarPoly::monomial(Q::one(), 0, 0)
    }

    /// c * p^a * t^b
    pub fn monomial(c: Q, a: i64, b: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((b, a), c);
        }
        BivarPoly { terms }
    }

    pub fn from_int(n: i64) -> Self {
        BivarPoly::monomial(Q::from_integer(BigInt::from(n)), 0, 0)
    }

    /// 1 - p^a t^b
    pub fn one_minus(a: i64, b: u32) -> Self {
        let mut r = BivarPoly::one();
        r.add_term(-Q::one(), a, b);
        r
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&(0, 0)).map_or(false, |c| c.is_one())
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, c: Q, a: i64, b: u32) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((b, a)).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(b, a));
        }
    }

    /// Terms as (coefficient, p-exponent, t-exponent), in canonical order.
    pub fn iter_terms(&self) -> impl Iterator<Item = (&Q, i64, u32)> {
        self.terms.iter().map(|(&(b, a), c)| (c, a, b))
    }

    pub fn t_degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(|&(b, _)| b)
    }

    pub fn is_t_free(&self) -> bool {
        self.t_degree().map_or(true, |d| d == 0)
    }

    /// Coefficient of t^b as a Laurent polynomial in p.
    pub fn t_coefficient(&self, b: u32) -> BivarPoly {
        let mut out = BivarPoly::zero();
        for (&(tb, a), c) in self.terms.range((b, i64::MIN)..=(b, i64::MAX)) {
            debug_assert_eq!(tb, b);
            out.add_term(c.clone(), a, 0);
        }
        out
    }

    pub fn scale(&self, c: &Q) -> BivarPoly {
        if c.is_zero() {
            return BivarPoly::zero();
        }
        let terms = self
            .terms
            .iter()
            .map(|(&k, v)| (k, v * c))
            .collect();
        BivarPoly { terms }
    }

    pub fn mul_monomial(&self, a: i64, b: u32) -> BivarPoly {
        let terms = self
            .terms
            .iter()
            .map(|(&(tb, pa), v)| ((tb + b, pa + a), v.clone()))
            .collect();
        BivarPoly { terms }
    }

    pub fn pow(&self, e: u32) -> BivarPoly {
        let mut result = BivarPoly::one();
        for _ in 0..e {
            result = &result * self;
        }
        result
    }

    /// Substitute t -> p^d * t (the s -> s - d shift on local factors).
    pub fn shift_t(&self, d: i64) -> BivarPoly {
        let terms = self
            .terms
            .iter()
            .map(|(&(b, a), v)| ((b, a + d * b as i64), v.clone()))
            .collect();
        BivarPoly { terms }
    }

    /// Evaluate p at an exact rational, leaving a polynomial in t
    /// (coefficients indexed by t-exponent).
    pub fn eval_p(&self, p: &Q) -> BTreeMap<u32, Q> {
        let mut out: BTreeMap<u32, Q> = BTreeMap::new();
        for (&(b, a), c) in &self.terms {
            let pa = pow_q(p, a);
            let entry = out.entry(b).or_insert_with(Q::zero);
            *entry += c * pa;
            if entry.is_zero() {
                out.remove(&b);
            }
        }
        out
    }

    /// Evaluate both variables.
    pub fn eval(&self, p: &Q, t: &Q) -> Q {
        let mut acc = Q::zero();
        for (&(b, a), c) in &self.terms {
            acc += c * pow_q(p, a) * pow_q(t, b as i64);
        }
        acc
    }

    /// Exact division by (1 - p^a t^b); None if not divisible.
    /// (a, b) must not be (0, 0).
    pub fn div_one_minus(&self, a: i64, b: u32) -> Option<BivarPoly> {
        assert!(!(a == 0 && b == 0), "divisor (1 - p^0 t^0) is zero");
        if self.is_zero() {
            return Some(BivarPoly::zero());
        }
        let mut rem = self.clone();
        let mut quot = BivarPoly::zero();
        if b > 0 {
            // Cancel terms in increasing t-degree; the quotient's t-degree
            // is bounded by deg_t(self) - b.
            let max_q_deg = self.t_degree()?.checked_sub(b)?;
            while let Some((&(tb, pa), c)) = rem.terms.iter().next() {
                if tb > max_q_deg {
                    return None;
                }
                let c = c.clone();
                quot.add_term(c.clone(), pa, tb);
                // rem -= c p^pa t^tb (1 - p^a t^b)
                rem.add_term(-c.clone(), pa, tb);
                rem.add_term(c, pa + a, tb + b);
            }
            Some(quot)
        } else {
            // t-free divisor 1 - p^a: divide each t-coefficient of the
            // numerator separately as a univariate Laurent polynomial in p.
            let t_degs: Vec<u32> = {
                let mut v: Vec<u32> = rem.terms.keys().map(|&(b, _)| b).collect();
                v.dedup();
                v
            };
            for tb in t_degs {
                let mut coeff: BTreeMap<i64, Q> = rem
                    .terms
                    .range((tb, i64::MIN)..=(tb, i64::MAX))
                    .map(|(&(_, pa), c)| (pa, c.clone()))
                    .collect();
                let lo = *coeff.keys().next().unwrap();
                let hi = *coeff.keys().next_back().unwrap();
                // Quotient exponents are confined to [lo, hi - a] (a > 0)
                // or [lo - a, hi] (a < 0); cancel from the end of the range
                // the divisor's constant term reaches first.
                while let Some((pa, c)) = if a > 0 {
                    coeff.iter().next().map(|(&k, v)| (k, v.clone()))
                } else {
                    coeff.iter().next_back().map(|(&k, v)| (k, v.clone()))
                } {
                    let in_range = if a > 0 { pa <= hi - a } else { pa >= lo - a };
                    if !in_range {
                        return None;
                    }
                    quot.add_term(c.clone(), pa, tb);
                    coeff.remove(&pa);
                    let entry = coeff.entry(pa + a).or_insert_with(Q::zero);
                    *entry += c;
                    if entry.is_zero() {
                        coeff.remove(&(pa + a));
                    }
                }
            }
            Some(quot)
        }
    }

    /// All-positive test used by sanity checks on counting series.
    pub fn is_nonnegative(&self) -> bool {
        self.terms.values().all(|c| !c.is_negative())
    }
}

fn pow_q(base: &Q, e: i64) -> Q {
    if e >= 0 {
        let mut acc = Q::one();
        for _ in 0..e {
            acc *= base;
        }
        acc
    } else {
        let inv = base.recip();
        let mut acc = Q::one();
        for _ in 0..(-e) {
            acc *= &inv;
        }
        acc
    }
}

impl Add for &BivarPoly {
    type Output = BivarPoly;
    fn add(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = self.clone();
        for (&(b, a), c) in &rhs.terms {
            out.add_term(c.clone(), a, b);
        }
        out
    }
}

impl Sub for &BivarPoly {
    type Output = BivarPoly;
    fn sub(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = self.clone();
        for (&(b, a), c) in &rhs.terms {
            out.add_term(-c.clone(), a, b);
        }
        out
    }
}

impl Mul for &BivarPoly {
    type Output = BivarPoly;
    fn mul(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = BivarPoly::zero();
        for (&(b1, a1), c1) in &self.terms {
            for (&(b2, a2), c2) in &rhs.terms {
                out.add_term(c1 * c2, a1 + a2, b1 + b2);
            }
        }
        out
    }
}

impl Neg for &BivarPoly {
    type Output = BivarPoly;
    fn neg(self) -> BivarPoly {
        let terms = self.terms.iter().map(|(&k, v)| (k, -v.clone())).collect();
        BivarPoly { terms }
    }
}

fn fmt_coeff(c: &Q, first: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if first {
        if c.is_negative() {
            write!(f, "-")?;
        }
    } else if c.is_negative() {
        write!(f, " - ")?;
    } else {
        write!(f, " + ")?;
    }
    Ok(())
}

impl fmt::Display for BivarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(b, a), c) in &self.terms {
            fmt_coeff(c, first, f)?;
            let abs = c.abs();
            let mut parts: Vec<String> = Vec::new();
            if !abs.is_one() || (a == 0 && b == 0) {
                parts.push(abs.to_string());
            }
            if a != 0 {
                parts.push(if a == 1 { "p".into() } else { format!("p^{}", a) });
            }
            if b != 0 {
                parts.push(if b == 1 { "t".into() } else { format!("t^{}", b) });
            }
            write!(f, "{}", parts.join("*"))?;
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn q(n: i64) -> Q {
        Q::from_integer(BigInt::from(n))
    }

    fn random_poly(rng: &mut StdRng) -> BivarPoly {
        let mut p = BivarPoly::zero();
        for _ in 0..rng.gen_range(0..5) {
            p.add_term(q(rng.gen_range(-3..=3)), rng.gen_range(-2..=2), rng.gen_range(0..3));
        }
        p
    }

    #[test]
    fn ring_axioms_on_random_inputs() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let a = random_poly(&mut rng);
            let b = random_poly(&mut rng);
            let c = random_poly(&mut rng);
            assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            assert_eq!(&a + &b, &b + &a);
            assert_eq!(&a * &b, &b * &a);
        }
    }

    #[test]
    fn identity_cancellation() {
        let one_minus_pt = BivarPoly::one_minus(1, 1);
        let quot = one_minus_pt.div_one_minus(1, 1).unwrap();
        assert!(quot.is_one());
    }

    #[test]
    fn difference_of_squares() {
        // (1 - p^2 t^2) / (1 - p t) = 1 + p t
        let num = BivarPoly::one_minus(2, 2);
        let quot = num.div_one_minus(1, 1).unwrap();
        let mut expected = BivarPoly::one();
        expected.add_term(q(1), 1, 1);
        assert_eq!(quot, expected);
    }

    #[test]
    fn non_divisible_rejected() {
        let mut num = BivarPoly::one();
        num.add_term(q(1), 0, 1); // 1 + t
        assert!(num.div_one_minus(0, 1).is_none());
        assert!(num.div_one_minus(1, 0).is_none());
    }

    #[test]
    fn t_free_division() {
        // (1 - p^-1)^2 / (1 - p^-1) = 1 - p^-1
        let f = BivarPoly::one_minus(-1, 0);
        let sq = &f * &f;
        assert_eq!(sq.div_one_minus(-1, 0).unwrap(), f);
        // and by the positive-direction divisor: (1-p)^2 / (1-p)
        let g = BivarPoly::one_minus(1, 0);
        let sq = &g * &g;
        assert_eq!(sq.div_one_minus(1, 0).unwrap(), g);
    }

    #[test]
    fn random_products_divide_exactly() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let a = rng.gen_range(-3..=3i64);
            let b = rng.gen_range(0..3u32);
            if a == 0 && b == 0 {
                continue;
            }
            let q0 = random_poly(&mut rng);
            if q0.is_zero() {
                continue;
            }
            let prod = &q0 * &BivarPoly::one_minus(a, b);
            let back = prod.div_one_minus(a, b).expect("exact division must succeed");
            assert_eq!(back, q0);
        }
    }

    #[test]
    fn shift_t_moves_p_exponent() {
        // t -> p^3 t on p^-2 t^2 gives p^4 t^2
        let m = BivarPoly::monomial(q(1), -2, 2);
        assert_eq!(m.shift_t(3), BivarPoly::monomial(q(1), 4, 2));
    }

    #[test]
    fn display_is_deterministic() {
        let mut p = BivarPoly::one_minus(3, 2);
        p.add_term(q(2), -1, 1);
        assert_eq!(p.to_string(), "1 + 2*p^-1*t - p^3*t^2");
    }
}
