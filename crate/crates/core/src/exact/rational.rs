use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::poly::{BivarPoly, Q};
use super::series::TSeries;

/// One denominator factor (1 - p^a t^b).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct DenomFactor {
    pub a: i64,
    pub b: u32,
}

/// Exact rational function in (p, t) with the denominator kept as a
/// product of factors (1 - p^a t^b).  Every local zeta factor produced by
/// the cone engine lives here.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BivariateRational {
    num: BivarPoly,
    // key sorted by (b, a), value = multiplicity
    den: BTreeMap<(u32, i64), u32>,
}

impl BivariateRational {
    pub fn new(num: BivarPoly, factors: impl IntoIterator<Item = (i64, u32, u32)>) -> Self {
        let mut den = BTreeMap::new();
        for (a, b, mult) in factors {
            assert!(!(a == 0 && b == 0), "denominator factor (1 - 1) is zero");
            if mult > 0 {
                *den.entry((b, a)).or_insert(0) += mult;
            }
        }
        BivariateRational { num, den }
    }

    pub fn zero() -> Self {
        BivariateRational::from_poly(BivarPoly::zero())
    }

    pub fn one() -> Self {
        BivariateRational::from_poly(BivarPoly::one())
    }

    pub fn from_poly(num: BivarPoly) -> Self {
        BivariateRational { num, den: BTreeMap::new() }
    }

    pub fn numerator(&self) -> &BivarPoly {
        &self.num
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Denominator factors as (a, b, multiplicity), sorted by (b, a).
    pub fn denominator(&self) -> Vec<(i64, u32, u32)> {
        self.den.iter().map(|(&(b, a), &m)| (a, b, m)).collect()
    }

    pub fn denominator_poly(&self) -> BivarPoly {
        expand_factors(&self.den)
    }

    /// Multiply by an extra denominator factor (1 - p^a t^b)^mult.
    pub fn div_factor(&self, a: i64, b: u32, mult: u32) -> Self {
        let mut out = self.clone();
        assert!(!(a == 0 && b == 0));
        *out.den.entry((b, a)).or_insert(0) += mult;
        out
    }

    pub fn mul_poly(&self, q: &BivarPoly) -> Self {
        BivariateRational { num: &self.num * q, den: self.den.clone() }
    }

    pub fn scale(&self, c: &Q) -> Self {
        BivariateRational { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Substitute t -> p^d t on the whole function.
    pub fn shift_t(&self, d: i64) -> Self {
        let num = self.num.shift_t(d);
        let den = self
            .den
            .iter()
            .map(|(&(b, a), &m)| ((b, a + d * b as i64), m))
            .collect();
        BivariateRational { num, den }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut den = self.den.clone();
        for (&k, &m) in &rhs.den {
            let e = den.entry(k).or_insert(0);
            *e = (*e).max(m);
        }
        // numerators scaled by the complements of their own denominators
        let lhs_extra = factor_complement(&den, &self.den);
        let rhs_extra = factor_complement(&den, &rhs.den);
        let num = &(&self.num * &expand_factors(&lhs_extra)) + &(&rhs.num * &expand_factors(&rhs_extra));
        BivariateRational { num, den }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut den = self.den.clone();
        for (&k, &m) in &rhs.den {
            *den.entry(k).or_insert(0) += m;
        }
        BivariateRational { num: &self.num * &rhs.num, den }
    }

    /// Canonical form: cancel every denominator factor that exactly divides
    /// the numerator.  Idempotent; preserves the function.
    pub fn normalize(&self) -> Self {
        let mut num = self.num.clone();
        let mut den = BTreeMap::new();
        if num.is_zero() {
            return BivariateRational::zero();
        }
        for (&(b, a), &mult) in &self.den {
            let mut left = mult;
            while left > 0 {
                match num.div_one_minus(a, b) {
                    Some(q) => {
                        num = q;
                        left -= 1;
                    }
                    None => break,
                }
            }
            if left > 0 {
                den.insert((b, a), left);
            }
        }
        BivariateRational { num, den }
    }

    /// Equality as rational functions, by cross-multiplication.
    pub fn eq_as_function(&self, rhs: &Self) -> bool {
        let l = &self.num * &expand_factors(&rhs.den);
        let r = &rhs.num * &expand_factors(&self.den);
        l == r
    }

    /// Power-series expansion in t up to the given order.  Any surviving
    /// t-free denominator factor must divide the expansion exactly =
    /// coefficients stay Laurent polynomials in p.
    ///
    /// Panics if a t-free factor does not divide out; pipeline values are
    /// normalized first and never hit this.
    pub fn series_expand(&self, order: u32) -> TSeries {
        let r = self.normalize();
        let mut series = TSeries::from_poly(&r.num, order);
        for (&(b, a), &mult) in &r.den {
            for _ in 0..mult {
                if b > 0 {
                    series = series.mul_geometric(a, b);
                } else {
                    series = series
                        .div_t_free_factor(a)
                        .expect("t-free denominator factor does not divide the series");
                }
            }
        }
        series
    }

    /// Exact substitution of a numeric prime for p.  t-free denominator
    /// factors become nonzero scalars and are folded into the numerator.
    pub fn specialize(&self, p: u64) -> UniRational {
        let pq = Q::from_integer(BigInt::from(p));
        let num: BTreeMap<u32, Q> = self.num.eval_p(&pq);
        let mut den: Vec<(Q, u32, u32)> = Vec::new();
        let mut unit = Q::one();
        for (&(b, a), &mult) in &self.den {
            let coeff = pow_q(&pq, a);
            if b == 0 {
                // (1 - p^a) is a nonzero scalar at numeric p
                let val = Q::one() - coeff;
                assert!(!val.is_zero(), "denominator factor vanishes at p = {}", p);
                for _ in 0..mult {
                    unit *= &val;
                }
            } else {
                den.push((coeff, b, mult));
            }
        }
        let num = num.into_iter().map(|(b, c)| (b, c / &unit)).collect();
        UniRational { num, den }
    }
}

fn pow_q(base: &Q, e: i64) -> Q {
    let mut acc = Q::one();
    if e >= 0 {
        for _ in 0..e {
            acc *= base;
        }
    } else {
        let inv = base.recip();
        for _ in 0..(-e) {
            acc *= &inv;
        }
    }
    acc
}

fn factor_complement(
    full: &BTreeMap<(u32, i64), u32>,
    part: &BTreeMap<(u32, i64), u32>,
) -> BTreeMap<(u32, i64), u32> {
    let mut out = BTreeMap::new();
    for (&k, &m) in full {
        let have = part.get(&k).copied().unwrap_or(0);
        if m > have {
            out.insert(k, m - have);
        }
    }
    out
}

fn expand_factors(den: &BTreeMap<(u32, i64), u32>) -> BivarPoly {
    let mut acc = BivarPoly::one();
    for (&(b, a), &m) in den {
        let f = BivarPoly::one_minus(a, b);
        for _ in 0..m {
            acc = &acc * &f;
        }
    }
    acc
}

impl fmt::Display for BivariateRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parenthesize = self.num.num_terms() > 1 && !self.den.is_empty();
        if parenthesize {
            write!(f, "({})", self.num)?;
        } else {
            write!(f, "{}", self.num)?;
        }
        for (&(b, a), &m) in &self.den {
            let mut base = String::from("1");
            if a != 0 || b != 0 {
                base.push_str(" - ");
                let mut parts: Vec<String> = Vec::new();
                if a != 0 {
                    parts.push(if a == 1 { "p".into() } else { format!("p^{}", a) });
                }
                if b != 0 {
                    parts.push(if b == 1 { "t".into() } else { format!("t^{}", b) });
                }
                if parts.is_empty() {
                    parts.push("1".into());
                }
                base.push_str(&parts.join("*"));
            }
            if m == 1 {
                write!(f, " / ({})", base)?;
            } else {
                write!(f, " / ({})^{}", base, m)?;
            }
        }
        Ok(())
    }
}

/// Rational function in t alone with exact rational coefficients; the
/// result of specializing a BivariateRational at a numeric prime.
#[derive(Clone, PartialEq, Debug)]
pub struct UniRational {
    /// numerator coefficients by t-exponent
    pub num: BTreeMap<u32, Q>,
    /// factors (1 - c t^b)^mult
    pub den: Vec<(Q, u32, u32)>,
}

impl UniRational {
    pub fn from_factors(num: BTreeMap<u32, Q>, den: Vec<(Q, u32, u32)>) -> Self {
        UniRational { num, den }
    }

    /// Series coefficients a_0 .. a_order.
    pub fn series(&self, order: u32) -> Vec<Q> {
        let n = order as usize + 1;
        let mut coeffs = vec![Q::zero(); n];
        for (&b, c) in &self.num {
            if (b as usize) < n {
                coeffs[b as usize] += c;
            }
        }
        for &(ref c, b, mult) in &self.den {
            for _ in 0..mult {
                // multiply by 1/(1 - c t^b)
                let step = b as usize;
                assert!(step > 0);
                let mut out = coeffs.clone();
                for i in step..n {
                    let add = &out[i - step] * c;
                    out[i] += add;
                }
                coeffs = out;
            }
        }
        coeffs
    }
}

impl fmt::Display for UniRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        let many = self.num.len() > 1 && !self.den.is_empty();
        if many {
            write!(f, "(")?;
        }
        for (&b, c) in &self.num {
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let abs = c.abs();
            if b == 0 {
                write!(f, "{}", abs)?;
            } else {
                if !abs.is_one() {
                    write!(f, "{}*", abs)?;
                }
                if b == 1 {
                    write!(f, "t")?;
                } else {
                    write!(f, "t^{}", b)?;
                }
            }
            first = false;
        }
        if many {
            write!(f, ")")?;
        }
        for &(ref c, b, mult) in &self.den {
            let tpart = if b == 1 { "t".to_string() } else { format!("t^{}", b) };
            let cpart = if c.is_one() { tpart } else { format!("{}*{}", c, tpart) };
            if mult == 1 {
                write!(f, " / (1 - {})", cpart)?;
            } else {
                write!(f, " / (1 - {})^{}", cpart, mult)?;
            }
        }
        Ok(())
    }
}
