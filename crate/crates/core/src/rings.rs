//! Rings additively isomorphic to ℤ^d, given by structure constants, and
//! Hermite-normal-form bases of their finite-index sublattices.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Euclid, One, Signed, Zero};
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RingKind {
    Lie,
    Associative,
    Plain,
}

impl RingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RingKind::Lie => "lie",
            RingKind::Associative => "associative",
            RingKind::Plain => "plain",
        }
    }

    pub fn parse(s: &str) -> Option<RingKind> {
        match s {
            "lie" => Some(RingKind::Lie),
            "associative" => Some(RingKind::Associative),
            "plain" => Some(RingKind::Plain),
            _ => None,
        }
    }
}

impl fmt::Display for RingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which lattices get counted.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CountKind {
    Subring,
    Ideal,
}

impl CountKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CountKind::Subring => "subring",
            CountKind::Ideal => "ideal",
        }
    }

    pub fn parse(s: &str) -> Option<CountKind> {
        match s {
            "subring" => Some(CountKind::Subring),
            "ideal" => Some(CountKind::Ideal),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum RingError {
    #[error("malformed ring file: {0}")]
    Parse(String),
    #[error("unknown builtin ring '{0}'")]
    UnknownBuiltin(String),
    #[error("validation failed: {0}")]
    Invalid(String),
}

/// The bilinear multiplication β of a ring L ≅ ℤ^d, tabulated on basis
/// vectors: `table[i][j]` is the coordinate vector of β(e_i, e_j).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StructureConstants {
    pub d: usize,
    pub kind: RingKind,
    pub name: String,
    table: Vec<Vec<Vec<i64>>>,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub dims_ok: bool,
    pub antisymmetry: Option<bool>,
    pub jacobi: Option<bool>,
    pub associativity: Option<bool>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.dims_ok
            && self.antisymmetry.unwrap_or(true)
            && self.jacobi.unwrap_or(true)
            && self.associativity.unwrap_or(true)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |o: Option<bool>| match o {
            None => "skipped",
            Some(true) => "pass",
            Some(false) => "FAIL",
        };
        writeln!(f, "dimensions:    {}", if self.dims_ok { "pass" } else { "FAIL" })?;
        writeln!(f, "antisymmetry:  {}", show(self.antisymmetry))?;
        writeln!(f, "jacobi:        {}", show(self.jacobi))?;
        write!(f, "associativity: {}", show(self.associativity))
    }
}

impl StructureConstants {
    pub fn new(d: usize, kind: RingKind, name: &str, table: Vec<Vec<Vec<i64>>>) -> Self {
        StructureConstants { d, kind, name: name.to_string(), table }
    }

    pub fn zero_table(d: usize, kind: RingKind, name: &str) -> Self {
        StructureConstants {
            d,
            kind,
            name: name.to_string(),
            table: vec![vec![vec![0; d]; d]; d],
        }
    }

    /// β(e_i, e_j) as a coordinate vector.
    pub fn beta_basis(&self, i: usize, j: usize) -> &[i64] {
        &self.table[i][j]
    }

    /// Set the e_k-coefficient of β(e_i, e_j).
    pub fn set_entry(&mut self, i: usize, j: usize, k: usize, c: i64) {
        self.table[i][j][k] = c;
    }

    /// β(x, y) for integer coordinate vectors.
    pub fn beta(&self, x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.d];
        for i in 0..self.d {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..self.d {
                if y[j].is_zero() {
                    continue;
                }
                let xy = &x[i] * &y[j];
                for (k, out_k) in out.iter_mut().enumerate() {
                    let c = self.table[i][j][k];
                    if c != 0 {
                        *out_k += &xy * BigInt::from(c);
                    }
                }
            }
        }
        out
    }

    pub fn is_zero_table(&self) -> bool {
        self.table
            .iter()
            .all(|row| row.iter().all(|v| v.iter().all(|&c| c == 0)))
    }

    pub fn is_antisymmetric(&self) -> bool {
        for i in 0..self.d {
            for j in 0..self.d {
                for k in 0..self.d {
                    if self.table[i][j][k] != -self.table[j][i][k] {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn jacobi_holds(&self) -> bool {
        let basis: Vec<Vec<BigInt>> = (0..self.d)
            .map(|i| {
                let mut v = vec![BigInt::zero(); self.d];
                v[i] = BigInt::one();
                v
            })
            .collect();
        for i in 0..self.d {
            for j in 0..self.d {
                for k in 0..self.d {
                    let ij = self.beta(&basis[i], &basis[j]);
                    let jk = self.beta(&basis[j], &basis[k]);
                    let ki = self.beta(&basis[k], &basis[i]);
                    let t1 = self.beta(&ij, &basis[k]);
                    let t2 = self.beta(&jk, &basis[i]);
                    let t3 = self.beta(&ki, &basis[j]);
                    for l in 0..self.d {
                        if (&t1[l] + &t2[l] + &t3[l]) != BigInt::zero() {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn associativity_holds(&self) -> bool {
        let basis: Vec<Vec<BigInt>> = (0..self.d)
            .map(|i| {
                let mut v = vec![BigInt::zero(); self.d];
                v[i] = BigInt::one();
                v
            })
            .collect();
        for i in 0..self.d {
            for j in 0..self.d {
                for k in 0..self.d {
                    let ij = self.beta(&basis[i], &basis[j]);
                    let jk = self.beta(&basis[j], &basis[k]);
                    let l1 = self.beta(&ij, &basis[k]);
                    let l2 = self.beta(&basis[i], &jk);
                    if l1 != l2 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Axiom checks according to the declared kind.
    pub fn validate(&self) -> ValidationReport {
        let dims_ok = self.table.len() == self.d
            && self
                .table
                .iter()
                .all(|row| row.len() == self.d && row.iter().all(|v| v.len() == self.d));
        if !dims_ok {
            return ValidationReport { dims_ok, ..Default::default() };
        }
        let mut report = ValidationReport { dims_ok, ..Default::default() };
        match self.kind {
            RingKind::Lie => {
                report.antisymmetry = Some(self.is_antisymmetric());
                report.jacobi = Some(self.jacobi_holds());
            }
            RingKind::Associative => {
                report.associativity = Some(self.associativity_holds());
            }
            RingKind::Plain => {}
        }
        report
    }

    /// Ring file format: line `d <rank> <kind>`, then `<i> <j> <k> <coeff>`
    /// lines (1-based indices, omitted triples are zero).
    pub fn to_file_string(&self) -> String {
        let mut out = format!("d {} {}\n", self.d, self.kind);
        for i in 0..self.d {
            for j in 0..self.d {
                for k in 0..self.d {
                    let c = self.table[i][j][k];
                    if c != 0 {
                        out.push_str(&format!("{} {} {} {}\n", i + 1, j + 1, k + 1, c));
                    }
                }
            }
        }
        out
    }

    pub fn from_file_string(text: &str) -> Result<Self, RingError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines.next().ok_or_else(|| RingError::Parse("empty file".into()))?;
        let mut it = header.split_whitespace();
        if it.next() != Some("d") {
            return Err(RingError::Parse("first line must be `d <rank> <kind>`".into()));
        }
        let d: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| RingError::Parse("bad rank".into()))?;
        if d == 0 {
            return Err(RingError::Parse("rank must be positive".into()));
        }
        let kind = it
            .next()
            .and_then(RingKind::parse)
            .ok_or_else(|| RingError::Parse("bad kind (lie|associative|plain)".into()))?;
        let mut table = vec![vec![vec![0i64; d]; d]; d];
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(RingError::Parse(format!("bad entry line: {}", line)));
            }
            let idx: Vec<usize> = parts[..3]
                .iter()
                .map(|s| s.parse::<usize>().map_err(|_| RingError::Parse(format!("bad index in: {}", line))))
                .collect::<Result<_, _>>()?;
            let c: i64 = parts[3]
                .parse()
                .map_err(|_| RingError::Parse(format!("bad coefficient in: {}", line)))?;
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            if i == 0 || j == 0 || k == 0 || i > d || j > d || k > d {
                return Err(RingError::Parse(format!("index out of range in: {}", line)));
            }
            table[i - 1][j - 1][k - 1] = c;
        }
        Ok(StructureConstants { d, kind, name: "file".to_string(), table })
    }

    /// Built-in rings: zd(d), heisenberg, sl2, f23.
    pub fn builtin(name: &str) -> Result<StructureConstants, RingError> {
        if let Some(rest) = name.strip_prefix("zd(").and_then(|r| r.strip_suffix(')')) {
            let d: usize = rest
                .parse()
                .map_err(|_| RingError::UnknownBuiltin(name.to_string()))?;
            if d == 0 {
                return Err(RingError::UnknownBuiltin(name.to_string()));
            }
            return Ok(StructureConstants::zero_table(d, RingKind::Lie, name));
        }
        match name {
            "heisenberg" => {
                // [e1, e2] = e3, e3 central
                let mut sc = StructureConstants::zero_table(3, RingKind::Lie, name);
                sc.table[0][1][2] = 1;
                sc.table[1][0][2] = -1;
                Ok(sc)
            }
            "sl2" => {
                // basis (e, f, h): [e,f] = h, [h,e] = 2e, [h,f] = -2f
                let mut sc = StructureConstants::zero_table(3, RingKind::Lie, name);
                sc.table[0][1][2] = 1;
                sc.table[1][0][2] = -1;
                sc.table[2][0][0] = 2;
                sc.table[0][2][0] = -2;
                sc.table[2][1][1] = -2;
                sc.table[1][2][1] = 2;
                Ok(sc)
            }
            "f23" => {
                // free class-two nilpotent Lie ring on x1,x2,x3 with centre
                // y12, y13, y23: [x_i, x_j] = y_ij for i < j
                let mut sc = StructureConstants::zero_table(6, RingKind::Lie, name);
                let y = |i: usize, j: usize| match (i, j) {
                    (0, 1) => 3,
                    (0, 2) => 4,
                    (1, 2) => 5,
                    _ => unreachable!(),
                };
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        sc.table[i][j][y(i, j)] = 1;
                        sc.table[j][i][y(i, j)] = -1;
                    }
                }
                Ok(sc)
            }
            _ => Err(RingError::UnknownBuiltin(name.to_string())),
        }
    }
}

/// Upper-triangular HNF basis of a finite-index p-power sublattice of ℤ^d:
/// diagonal entries are powers of p, entry (i, j) above the diagonal is
/// reduced modulo the diagonal entry of row j.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LatticeBasis {
    pub p: u64,
    pub mat: Vec<Vec<BigInt>>,
}

impl LatticeBasis {
    pub fn new(p: u64, mat: Vec<Vec<BigInt>>) -> Self {
        let d = mat.len();
        for (i, row) in mat.iter().enumerate() {
            assert_eq!(row.len(), d);
            for (j, v) in row.iter().enumerate() {
                if j < i {
                    assert!(v.is_zero(), "basis must be upper triangular");
                }
            }
            assert!(row[i].is_positive());
        }
        LatticeBasis { p, mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.len()
    }

    /// p-adic valuation of the index (sum of diagonal exponents).
    pub fn index_valuation(&self) -> u32 {
        let p = BigInt::from(self.p);
        self.mat
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut v = 0u32;
                let mut x = row[i].clone();
                while (&x % &p).is_zero() {
                    x /= &p;
                    v += 1;
                }
                assert!(x.is_one(), "diagonal entries must be powers of p");
                v
            })
            .sum()
    }

    /// Reduce off-diagonal entries into canonical range: entry (i, j) taken
    /// modulo the diagonal of row j, clearing column by column with row
    /// operations.  The row span is unchanged.
    pub fn reduce(&self) -> LatticeBasis {
        let d = self.dim();
        let mut m = self.mat.clone();
        for j in (0..d).rev() {
            let diag = m[j][j].clone();
            for i in 0..j {
                let q = m[i][j].div_euclid(&diag);
                if !q.is_zero() {
                    for k in j..d {
                        let sub = &q * &m[j][k];
                        m[i][k] -= sub;
                    }
                }
            }
        }
        LatticeBasis { p: self.p, mat: m }
    }

    pub fn is_reduced(&self) -> bool {
        let d = self.dim();
        for j in 0..d {
            for i in 0..j {
                if self.mat[i][j].is_negative() || self.mat[i][j] >= self.mat[j][j] {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::membership;

    #[test]
    fn builtins_validate() {
        for name in ["zd(1)", "zd(2)", "zd(4)", "heisenberg", "sl2", "f23"] {
            let sc = StructureConstants::builtin(name).unwrap();
            let report = sc.validate();
            assert!(report.passed(), "{} failed validation:\n{}", name, report);
        }
    }

    #[test]
    fn zd_is_zero_table() {
        let sc = StructureConstants::builtin("zd(2)").unwrap();
        assert_eq!(sc.d, 2);
        assert!(sc.is_zero_table());
        assert!(sc.validate().passed());
    }

    #[test]
    fn forced_antisymmetry_violation_fails() {
        let mut sc = StructureConstants::zero_table(3, RingKind::Lie, "broken");
        sc.table[0][1][2] = 1; // β(e1,e2)=e3 but β(e2,e1)=0
        let report = sc.validate();
        assert_eq!(report.antisymmetry, Some(false));
        assert!(!report.passed());
    }

    #[test]
    fn sl2_basis_constants() {
        let sc = StructureConstants::builtin("sl2").unwrap();
        assert_eq!(sc.beta_basis(0, 1), &[0, 0, 1]); // [e,f] = h
        assert_eq!(sc.beta_basis(2, 0), &[2, 0, 0]); // [h,e] = 2e
        assert_eq!(sc.beta_basis(2, 1), &[0, -2, 0]); // [h,f] = -2f
    }

    #[test]
    fn f23_shape() {
        let sc = StructureConstants::builtin("f23").unwrap();
        assert_eq!(sc.d, 6);
        assert_eq!(sc.beta_basis(0, 1), &[0, 0, 0, 1, 0, 0]);
        assert_eq!(sc.beta_basis(1, 2), &[0, 0, 0, 0, 0, 1]);
        // centre: y's bracket to zero
        for i in 3..6 {
            for j in 0..6 {
                assert!(sc.beta_basis(i, j).iter().all(|&c| c == 0));
            }
        }
    }

    #[test]
    fn file_roundtrip_bit_exact() {
        for name in ["zd(3)", "heisenberg", "sl2", "f23"] {
            let sc = StructureConstants::builtin(name).unwrap();
            let text = sc.to_file_string();
            let back = StructureConstants::from_file_string(&text).unwrap();
            assert_eq!(back.to_file_string(), text);
            assert_eq!(back.d, sc.d);
            assert_eq!(back.table, sc.table);
        }
    }

    #[test]
    fn file_parse_errors() {
        assert!(StructureConstants::from_file_string("").is_err());
        assert!(StructureConstants::from_file_string("d 0 lie").is_err());
        assert!(StructureConstants::from_file_string("d 2 weird").is_err());
        assert!(StructureConstants::from_file_string("d 2 lie\n1 2 3 1").is_err());
    }

    #[test]
    fn reduce_is_idempotent_and_span_preserving() {
        let b = LatticeBasis::new(
            2,
            vec![
                vec![BigInt::from(2), BigInt::from(7), BigInt::from(5)],
                vec![BigInt::from(0), BigInt::from(4), BigInt::from(9)],
                vec![BigInt::from(0), BigInt::from(0), BigInt::from(8)],
            ],
        );
        let r = b.reduce();
        assert!(r.is_reduced());
        assert_eq!(r.reduce(), r);
        assert_eq!(r.index_valuation(), b.index_valuation());
        // mutual membership of rows => same span
        for row in &b.mat {
            assert!(membership(&r.mat, row, 2));
        }
        for row in &r.mat {
            assert!(membership(&b.mat, row, 2));
        }
    }
}
