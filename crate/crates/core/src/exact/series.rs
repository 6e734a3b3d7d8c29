use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::poly::{BivarPoly, Q};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    #[error("series logarithm needs constant coefficient 1, got {0}")]
    NonUnitConstant(String),
    #[error("series orders differ: {0} vs {1}")]
    OrderMismatch(u32, u32),
}

/// Truncated power series in t; coefficients are Laurent polynomials in p.
/// Arithmetic never consults degrees above the truncation order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TSeries {
    coeffs: Vec<BivarPoly>,
}

impl TSeries {
    pub fn zero(order: u32) -> Self {
        TSeries { coeffs: vec![BivarPoly::zero(); order as usize + 1] }
    }

    pub fn one(order: u32) -> Self {
        let mut s = TSeries::zero(order);
        s.coeffs[0] = BivarPoly::one();
        s
    }

    pub fn from_poly(p: &BivarPoly, order: u32) -> Self {
        let mut s = TSeries::zero(order);
        for (c, a, b) in p.iter_terms() {
            if b <= order {
                s.coeffs[b as usize].add_term(c.clone(), a, 0);
            }
        }
        s
    }

    pub fn from_coeffs(coeffs: Vec<BivarPoly>) -> Self {
        assert!(!coeffs.is_empty());
        for c in &coeffs {
            assert!(c.is_t_free(), "series coefficients must be t-free");
        }
        TSeries { coeffs }
    }

    pub fn order(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn coefficient(&self, n: u32) -> &BivarPoly {
        &self.coeffs[n as usize]
    }

    pub fn coefficients(&self) -> &[BivarPoly] {
        &self.coeffs
    }

    pub fn truncate(&self, order: u32) -> TSeries {
        assert!(order <= self.order());
        TSeries { coeffs: self.coeffs[..=order as usize].to_vec() }
    }

    pub fn is_prefix_of(&self, other: &TSeries) -> bool {
        self.order() <= other.order()
            && self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a == b)
    }

    pub fn add(&self, rhs: &TSeries) -> TSeries {
        assert_eq!(self.order(), rhs.order());
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        TSeries { coeffs }
    }

    pub fn mul(&self, rhs: &TSeries) -> TSeries {
        assert_eq!(self.order(), rhs.order());
        let n = self.coeffs.len();
        let mut coeffs = vec![BivarPoly::zero(); n];
        for i in 0..n {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..n - i {
                if rhs.coeffs[j].is_zero() {
                    continue;
                }
                coeffs[i + j] = &coeffs[i + j] + &(&self.coeffs[i] * &rhs.coeffs[j]);
            }
        }
        TSeries { coeffs }
    }

    pub fn scale_poly(&self, q: &BivarPoly) -> TSeries {
        assert!(q.is_t_free());
        let coeffs = self.coeffs.iter().map(|c| c * q).collect();
        TSeries { coeffs }
    }

    /// Multiply by 1 / (1 - p^a t^b) for b >= 1.
    pub fn mul_geometric(&self, a: i64, b: u32) -> TSeries {
        assert!(b >= 1);
        let n = self.coeffs.len();
        let mut coeffs = self.coeffs.clone();
        let step = b as usize;
        for i in step..n {
            let add = coeffs[i - step].mul_monomial(a, 0);
            coeffs[i] = &coeffs[i] + &add;
        }
        TSeries { coeffs }
    }

    /// Multiply by (1 - p^a t^b) for b >= 1.
    pub fn mul_one_minus(&self, a: i64, b: u32) -> TSeries {
        assert!(b >= 1);
        let n = self.coeffs.len();
        let mut coeffs = self.coeffs.clone();
        let step = b as usize;
        for i in (step..n).rev() {
            let sub = self.coeffs[i - step].mul_monomial(a, 0);
            coeffs[i] = &coeffs[i] - &sub;
        }
        TSeries { coeffs }
    }

    /// Divide every coefficient exactly by (1 - p^a); None when some
    /// coefficient is not divisible.
    pub fn div_t_free_factor(&self, a: i64) -> Option<TSeries> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            coeffs.push(c.div_one_minus(a, 0)?);
        }
        Some(TSeries { coeffs })
    }

    /// Formal logarithm; constant coefficient must be exactly 1.
    pub fn log(&self) -> Result<TSeries, SeriesError> {
        if !self.coeffs[0].is_one() {
            return Err(SeriesError::NonUnitConstant(self.coeffs[0].to_string()));
        }
        let n = self.coeffs.len();
        let mut l = vec![BivarPoly::zero(); n];
        // n c_n = sum_{j=1..n} j l_j c_{n-j}  =>  l_n = c_n - (1/n) sum_{j<n} j l_j c_{n-j}
        for k in 1..n {
            let mut acc = self.coeffs[k].clone();
            for j in 1..k {
                let prod = &l[j] * &self.coeffs[k - j];
                acc = &acc - &prod.scale(&Q::new(j.into(), k.into()));
            }
            l[k] = acc;
        }
        Ok(TSeries { coeffs: l })
    }

    /// Formal exponential of a series with zero constant coefficient.
    pub fn exp(&self) -> Result<TSeries, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonUnitConstant(self.coeffs[0].to_string()));
        }
        let n = self.coeffs.len();
        let mut e = vec![BivarPoly::zero(); n];
        e[0] = BivarPoly::one();
        // e_n = (1/n) sum_{j=1..n} j l_j e_{n-j}
        for k in 1..n {
            let mut acc = BivarPoly::zero();
            for j in 1..=k {
                let prod = &self.coeffs[j] * &e[k - j];
                acc = &acc + &prod.scale(&Q::new(j.into(), k.into()));
            }
            e[k] = acc;
        }
        Ok(TSeries { coeffs: e })
    }

    /// Evaluate the p variable, giving plain rational coefficients.
    pub fn eval_p(&self, p: &BigRational) -> Vec<BigRational> {
        self.coeffs
            .iter()
            .map(|c| c.eval(p, &BigRational::zero()))
            .collect()
    }
}

impl fmt::Display for TSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn mercator_series() {
        // log(1 + t) = t - t^2/2 + t^3/3
        let mut p = BivarPoly::one();
        p.add_term(q(1, 1), 0, 1);
        let s = TSeries::from_poly(&p, 3);
        let l = s.log().unwrap();
        assert!(l.coefficient(0).is_zero());
        assert_eq!(l.coefficient(1), &BivarPoly::monomial(q(1, 1), 0, 0));
        assert_eq!(l.coefficient(2), &BivarPoly::monomial(q(-1, 2), 0, 0));
        assert_eq!(l.coefficient(3), &BivarPoly::monomial(q(1, 3), 0, 0));
    }

    #[test]
    fn log_of_geometric() {
        // log(1/(1 - p t)) = p t + p^2 t^2 / 2 + ...
        let s = TSeries::one(2).mul_geometric(1, 1);
        let l = s.log().unwrap();
        assert_eq!(l.coefficient(1), &BivarPoly::monomial(q(1, 1), 1, 0));
        assert_eq!(l.coefficient(2), &BivarPoly::monomial(q(1, 2), 2, 0));
    }

    #[test]
    fn log_of_boundary_example_series() {
        // series [1, p^-1, p^-1]: log = [0, p^-1, p^-1 - p^-2/2]
        let coeffs = vec![
            BivarPoly::one(),
            BivarPoly::monomial(q(1, 1), -1, 0),
            BivarPoly::monomial(q(1, 1), -1, 0),
        ];
        let s = TSeries::from_coeffs(coeffs);
        let l = s.log().unwrap();
        assert_eq!(l.coefficient(1), &BivarPoly::monomial(q(1, 1), -1, 0));
        let mut expect2 = BivarPoly::monomial(q(1, 1), -1, 0);
        expect2.add_term(q(-1, 2), -2, 0);
        assert_eq!(l.coefficient(2), &expect2);
    }

    #[test]
    fn exp_log_roundtrip() {
        let r = super::super::rational::BivariateRational::new(
            BivarPoly::one_minus(3, 3),
            [(0, 1, 1), (1, 1, 1), (3, 2, 1)],
        );
        let s = r.series_expand(6);
        let back = s.log().unwrap().exp().unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn log_rejects_nonunit_constant() {
        let s = TSeries::from_poly(&BivarPoly::from_int(2), 2);
        assert!(s.log().is_err());
    }

    #[test]
    fn mul_one_minus_inverts_geometric() {
        let s = TSeries::one(5).mul_geometric(2, 1);
        let back = s.mul_one_minus(2, 1);
        assert_eq!(back, TSeries::one(5));
    }
}
