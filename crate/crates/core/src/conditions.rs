//! Symbolic derivation of the valuation conditions that cut out subring
//! and ideal bases among upper-triangular matrices, classification of the
//! resulting polynomials as monomial or not, and assembly of cone
//! integral data.
//!
//! Variables are the upper-triangular matrix entries m_rs (1 ≤ r ≤ s ≤ d),
//! ordered row-major; a basis row 𝐦_i has zeros before position i.  For a
//! ring with multiplication tables C_j (row i of C_j is β(e_i, e_j)), an
//! ideal basis must solve 𝐦_i C_j M^♮ ≡ 0 modulo the diagonal prefix
//! products, and a subring basis the same with C_j replaced by
//! Σ_{l ≥ j} m_jl C_l.  Each component gives a condition
//! v(m_11 ⋯ m_kk) ≤ v(g_ijk).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rings::{CountKind, StructureConstants};

#[derive(Debug, Error)]
pub enum CondError {
    #[error("malformed cone data file: {0}")]
    Parse(String),
}

/// Multivariate polynomial over ℤ in the m_rs variables.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SymPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u16>, BigInt>,
}

/// Index of variable m_rs (0-based r ≤ s) in row-major upper-triangular
/// order for rank d.
pub fn var_index(d: usize, r: usize, s: usize) -> usize {
    debug_assert!(r <= s && s < d);
    r * d - r * (r + 1) / 2 + s - r + r
}

pub fn var_count(d: usize) -> usize {
    d * (d + 1) / 2
}

pub fn var_name(d: usize, idx: usize) -> String {
    for r in 0..d {
        for s in r..d {
            if var_index(d, r, s) == idx {
                return format!("m{}{}", r + 1, s + 1);
            }
        }
    }
    format!("x{}", idx)
}

impl SymPoly {
    pub fn zero(nvars: usize) -> Self {
        SymPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: i64) -> Self {
        let mut p = SymPoly::zero(nvars);
        p.add_term(BigInt::from(c), vec![0; nvars]);
        p
    }

    pub fn var(nvars: usize, idx: usize) -> Self {
        let mut exps = vec![0u16; nvars];
        exps[idx] = 1;
        let mut p = SymPoly::zero(nvars);
        p.add_term(BigInt::one(), exps);
        p
    }

    pub fn monomial(nvars: usize, c: BigInt, exps: Vec<u16>) -> Self {
        let mut p = SymPoly::zero(nvars);
        p.add_term(c, exps);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, c: BigInt, exps: Vec<u16>) {
        debug_assert_eq!(exps.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(entry) => {
                *entry += c;
                if entry.is_zero() {
                    self.terms.remove(&exps);
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn add(&self, rhs: &SymPoly) -> SymPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(c.clone(), e.clone());
        }
        out
    }

    pub fn neg(&self) -> SymPoly {
        SymPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }

    pub fn mul(&self, rhs: &SymPoly) -> SymPoly {
        let mut out = SymPoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let exps: Vec<u16> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(c1 * c2, exps);
            }
        }
        out
    }

    /// Exact division by a monomial; panics if any term is not divisible.
    pub fn div_monomial(&self, exps: &[u16]) -> SymPoly {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let q: Vec<u16> = e
                    .iter()
                    .zip(exps)
                    .map(|(a, b)| a.checked_sub(*b).expect("monomial division not exact"))
                    .collect();
                (q, c.clone())
            })
            .collect();
        SymPoly { nvars: self.nvars, terms }
    }

    /// Some((coefficient, exponents)) when the polynomial is a single term.
    pub fn as_monomial(&self) -> Option<(BigInt, Vec<u16>)> {
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().unwrap();
            Some((c.clone(), e.clone()))
        } else {
            None
        }
    }

    pub fn leading_negative(&self) -> bool {
        matches!(self.terms.iter().next(), Some((_, c)) if c.is_negative())
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as u32).sum())
            .max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|e| e.iter().map(|&x| x as u32).sum::<u32>());
        match degs.next() {
            None => true,
            Some(d0) => degs.all(|d| d == d0),
        }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn render(&self, d: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        let mut first = true;
        for (e, c) in &self.terms {
            if first {
                if c.is_negative() {
                    out.push('-');
                }
            } else if c.is_negative() {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let abs = c.magnitude();
            let mut parts: Vec<String> = Vec::new();
            if !abs.is_one() || e.iter().all(|&x| x == 0) {
                parts.push(abs.to_string());
            }
            for (idx, &exp) in e.iter().enumerate() {
                if exp == 1 {
                    parts.push(var_name(d, idx));
                } else if exp > 1 {
                    parts.push(format!("{}^{}", var_name(d, idx), exp));
                }
            }
            out.push_str(&parts.join("*"));
            first = false;
        }
        out
    }
}

/// d×d matrix of symbolic polynomials.
pub type SymbolicMatrix = Vec<Vec<SymPoly>>;

/// The generic upper-triangular matrix M in the m_rs variables.
pub fn generic_upper_triangular(d: usize) -> SymbolicMatrix {
    let n = var_count(d);
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i <= j {
                        SymPoly::var(n, var_index(d, i, j))
                    } else {
                        SymPoly::zero(n)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn sym_mat_mul(a: &SymbolicMatrix, b: &SymbolicMatrix) -> SymbolicMatrix {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut acc = SymPoly::zero(a[0][0].nvars());
                    for (k, bk) in b.iter().enumerate() {
                        if a[i][k].is_zero() || bk[j].is_zero() {
                            continue;
                        }
                        acc = acc.add(&a[i][k].mul(&bk[j]));
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn sym_row_mat(row: &[SymPoly], m: &SymbolicMatrix) -> Vec<SymPoly> {
    let d = m.len();
    (0..d)
        .map(|j| {
            let mut acc = SymPoly::zero(row[0].nvars());
            for (k, mk) in m.iter().enumerate() {
                if row[k].is_zero() || mk[j].is_zero() {
                    continue;
                }
                acc = acc.add(&row[k].mul(&mk[j]));
            }
            acc
        })
        .collect()
}

fn sym_det(m: &[Vec<SymPoly>], nvars: usize) -> SymPoly {
    let d = m.len();
    if d == 0 {
        return SymPoly::constant(nvars, 1);
    }
    if d == 1 {
        return m[0][0].clone();
    }
    let mut acc = SymPoly::zero(nvars);
    for i in 0..d {
        if m[i][0].is_zero() {
            continue;
        }
        let minor: Vec<Vec<SymPoly>> = m
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != i)
            .map(|(_, row)| row[1..].to_vec())
            .collect();
        let mut term = m[i][0].mul(&sym_det(&minor, nvars));
        if i % 2 == 1 {
            term = term.neg();
        }
        acc = acc.add(&term);
    }
    acc
}

/// The scaled adjoint M^♮ = adj(M) · diag(m_22^{-1}⋯m_dd^{-1}, …, m_dd^{-1}, 1),
/// a polynomial matrix with M · M^♮ = diag(m_11, m_11 m_22, …, m_11 ⋯ m_dd).
pub fn natural_adjoint(d: usize) -> SymbolicMatrix {
    let m = generic_upper_triangular(d);
    let nvars = var_count(d);
    let mut nat: SymbolicMatrix = vec![vec![SymPoly::zero(nvars); d]; d];
    for i in 0..d {
        // adjugate of an upper-triangular matrix is upper triangular
        for k in i..d {
            let minor: Vec<Vec<SymPoly>> = m
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != k)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != i)
                        .map(|(_, p)| p.clone())
                        .collect()
                })
                .collect();
            let mut adj = sym_det(&minor, nvars);
            if (i + k) % 2 == 1 {
                adj = adj.neg();
            }
            // divide column k of the adjugate by m_{k+2,k+2} ⋯ m_dd
            let mut div = vec![0u16; nvars];
            for j in (k + 1)..d {
                div[var_index(d, j, j)] += 1;
            }
            nat[i][k] = adj.div_monomial(&div);
        }
    }
    nat
}

/// Multiplication table C_j as a symbolic (constant) matrix: row i is
/// β(e_i, e_j).  `transpose` swaps the argument order.
fn c_matrix(sc: &StructureConstants, j: usize, transpose: bool, nvars: usize) -> SymbolicMatrix {
    let d = sc.d;
    (0..d)
        .map(|i| {
            let b = if transpose { sc.beta_basis(j, i) } else { sc.beta_basis(i, j) };
            b.iter().map(|&c| SymPoly::constant(nvars, c)).collect()
        })
        .collect()
}

fn generic_row(d: usize, i: usize) -> Vec<SymPoly> {
    let nvars = var_count(d);
    (0..d)
        .map(|j| {
            if j >= i {
                SymPoly::var(nvars, var_index(d, i, j))
            } else {
                SymPoly::zero(nvars)
            }
        })
        .collect()
}

/// Σ_{l ≥ j} m_jl C_l, the subring-side replacement for C_j.
fn row_combination(sc: &StructureConstants, j: usize, nvars: usize) -> SymbolicMatrix {
    let d = sc.d;
    let mut combo: SymbolicMatrix = vec![vec![SymPoly::zero(nvars); d]; d];
    for l in j..d {
        let m_jl = SymPoly::var(nvars, var_index(d, j, l));
        let cl = c_matrix(sc, l, false, nvars);
        for r in 0..d {
            for c in 0..d {
                if cl[r][c].is_zero() {
                    continue;
                }
                combo[r][c] = combo[r][c].add(&m_jl.mul(&cl[r][c]));
            }
        }
    }
    combo
}

/// One derived condition v(m_11 ⋯ m_kk) ≤ v(g).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Condition {
    /// diagonal prefix length k (1-based)
    pub k: usize,
    pub g: SymPoly,
    /// originating (i, j) pairs, 1-based, for reporting
    pub sources: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct ConditionSet {
    pub d: usize,
    pub kind: CountKind,
    pub conditions: Vec<Condition>,
}

impl ConditionSet {
    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }
}

/// Solve the membership systems of both kinds symbolically.  Zero
/// polynomials are vacuous (v(0) = ∞) and dropped; duplicate conditions
/// (up to sign) are merged.  For a non-antisymmetric ring the ideal test
/// covers both argument orders, matching the oracle's two-sided ideals.
pub fn derive_conditions(sc: &StructureConstants, kind: CountKind) -> ConditionSet {
    let d = sc.d;
    let nvars = var_count(d);
    let nat = natural_adjoint(d);
    let antisym = sc.is_antisymmetric();
    let mut conditions: Vec<Condition> = Vec::new();
    let mut add_condition = |k: usize, g: SymPoly, src: (usize, usize)| {
        if g.is_zero() {
            return;
        }
        let g = if g.leading_negative() { g.neg() } else { g };
        for existing in conditions.iter_mut() {
            if existing.k == k && existing.g == g {
                existing.sources.push(src);
                return;
            }
        }
        conditions.push(Condition { k, g, sources: vec![src] });
    };
    match kind {
        CountKind::Ideal => {
            let sides: &[bool] = if antisym { &[false] } else { &[false, true] };
            for &transpose in sides {
                for i in 0..d {
                    let row = generic_row(d, i);
                    for j in 0..d {
                        let cj = c_matrix(sc, j, transpose, nvars);
                        let v = sym_row_mat(&row, &cj);
                        let w = sym_row_mat(&v, &nat);
                        for (k, g) in w.into_iter().enumerate() {
                            add_condition(k + 1, g, (i + 1, j + 1));
                        }
                    }
                }
            }
        }
        CountKind::Subring => {
            for i in 0..d {
                let row_i = generic_row(d, i);
                for j in 0..d {
                    if antisym && j <= i {
                        continue;
                    }
                    let combo = row_combination(sc, j, nvars);
                    let v = sym_row_mat(&row_i, &combo);
                    let w = sym_row_mat(&v, &nat);
                    for (k, g) in w.into_iter().enumerate() {
                        add_condition(k + 1, g, (i + 1, j + 1));
                    }
                }
            }
        }
    }
    ConditionSet { d, kind, conditions }
}

/// Where cone integral data came from.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Provenance {
    /// derived from structure constants of a rank-d ring
    RingDerived { d: usize },
    UserSupplied,
    /// numerical data of a resolution; the ambient dimension can differ
    /// from the number of components
    ResolutionData,
}

/// Exponent-vector cone integral data: integrand monomials f_0, g_0,
/// conditions v(f_i) ≤ v(g_i) and differential multiplicities ν.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConeIntegralData {
    /// number of components / variables (exponent-vector length)
    pub t: usize,
    /// ambient integration dimension m (= t for monomial data)
    pub ambient: usize,
    pub f0: Vec<u32>,
    pub g0: Vec<u32>,
    pub nu: Vec<u32>,
    pub conditions: Vec<(Vec<u32>, Vec<u32>)>,
    pub provenance: Provenance,
    pub exceptional_primes: BTreeSet<u64>,
    /// user-supplied c_{p,I} polynomials in p (coeff, exponent), keyed by
    /// component subset
    pub component_counts: Option<BTreeMap<BTreeSet<usize>, Vec<(i64, u32)>>>,
}

impl ConeIntegralData {
    pub fn ring_rank(&self) -> Option<usize> {
        match self.provenance {
            Provenance::RingDerived { d } => Some(d),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), CondError> {
        for v in [&self.f0, &self.g0, &self.nu] {
            if v.len() != self.t {
                return Err(CondError::Parse("vector length != m".into()));
            }
        }
        if self.nu.iter().any(|&x| x == 0) {
            return Err(CondError::Parse("nu entries must be positive".into()));
        }
        for (f, g) in &self.conditions {
            if f.len() != self.t || g.len() != self.t {
                return Err(CondError::Parse("condition vector length != m".into()));
            }
        }
        if self.f0.iter().all(|&x| x == 0) {
            return Err(CondError::Parse(
                "constant f0 gives the excluded constant integral".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NonMonomialReport {
    pub kind: CountKind,
    pub d: usize,
    /// (k, polynomial) for every non-monomial g
    pub offenders: Vec<(usize, SymPoly)>,
}

impl fmt::Display for NonMonomialReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} condition set is not monomial; {} condition(s) need a resolution:",
            self.kind.as_str(),
            self.offenders.len()
        )?;
        for (k, g) in &self.offenders {
            let prefix: Vec<String> = (1..=*k).map(|i| format!("m{}{}", i, i)).collect();
            writeln!(f, "  v({}) <= v({})", prefix.join("*"), g.render(self.d))?;
        }
        write!(f, "supply resolution numerical data as a cone-data file, or rely on the oracle")
    }
}

/// Decide whether every derived condition polynomial is a constant times a
/// monomial; if so produce cone integral data with the standard integrand
/// exponents, otherwise report the offenders.  Constants contribute their
/// prime divisors as exceptional primes; vacuous conditions (g-exponents
/// dominating f-exponents) are dropped.
pub fn classify(cs: &ConditionSet) -> Result<ConeIntegralData, NonMonomialReport> {
    let d = cs.d;
    let t = var_count(d);
    let mut offenders = Vec::new();
    let mut conds: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
    let mut exceptional: BTreeSet<u64> = BTreeSet::new();
    for cond in &cs.conditions {
        match cond.g.as_monomial() {
            None => offenders.push((cond.k, cond.g.clone())),
            Some((coeff, exps)) => {
                for q in prime_factors(&coeff) {
                    exceptional.insert(q);
                }
                let mut f = vec![0u32; t];
                for i in 0..cond.k {
                    f[var_index(d, i, i)] = 1;
                }
                let g: Vec<u32> = exps.iter().map(|&e| e as u32).collect();
                if f.iter().zip(&g).all(|(a, b)| b >= a) {
                    continue;
                }
                if !conds.contains(&(f.clone(), g.clone())) {
                    conds.push((f, g));
                }
            }
        }
    }
    if !offenders.is_empty() {
        return Err(NonMonomialReport { kind: cs.kind, d, offenders });
    }
    let mut f0 = vec![0u32; t];
    let mut g0 = vec![0u32; t];
    for i in 0..d {
        f0[var_index(d, i, i)] = 1;
        g0[var_index(d, i, i)] = (d - 1 - i) as u32;
    }
    Ok(ConeIntegralData {
        t,
        ambient: t,
        f0,
        g0,
        nu: vec![1; t],
        conditions: conds,
        provenance: Provenance::RingDerived { d },
        exceptional_primes: exceptional,
        component_counts: None,
    })
}

fn prime_factors(n: &BigInt) -> Vec<u64> {
    let mut n: u64 = match u64::try_from(n.magnitude().clone()) {
        Ok(v) => v,
        Err(_) => return Vec::new(),
    };
    let mut out = Vec::new();
    let mut q = 2u64;
    while q * q <= n {
        if n % q == 0 {
            out.push(q);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// The product polynomial whose resolution controls the local factors:
/// the diagonal prefactor times every nonzero entry of the d condition
/// matrices M C_j M^♮ (ideal) resp. M (Σ_{l≥j} m_jl C_l) M^♮ (subring).
/// (The source text writes F^♮ for one of these; the kinds here follow
/// the membership systems.)
pub fn f_polynomial(sc: &StructureConstants, kind: CountKind) -> SymPoly {
    let d = sc.d;
    let nvars = var_count(d);
    let m = generic_upper_triangular(d);
    let nat = natural_adjoint(d);
    let mut exps = vec![0u16; nvars];
    for i in 0..d {
        exps[var_index(d, i, i)] = ((d * d + 1) * (d - i)) as u16;
    }
    let mut f = SymPoly::monomial(nvars, BigInt::one(), exps);
    for j in 0..d {
        let inner: SymbolicMatrix = match kind {
            CountKind::Ideal => c_matrix(sc, j, false, nvars),
            CountKind::Subring => row_combination(sc, j, nvars),
        };
        let prod = sym_mat_mul(&sym_mat_mul(&m, &inner), &nat);
        for row in prod {
            for entry in row {
                if !entry.is_zero() {
                    f = f.mul(&entry);
                }
            }
        }
    }
    f
}

impl ConeIntegralData {
    /// Cone-data file: `m <t>`, optional `ambient <m>`, `f0 ...`, `g0 ...`,
    /// `nu ...`, `cond <f exponents> | <g exponents>` lines, and optional
    /// `cpoly <bitmask> <c*p^e+...>` lines carrying c_{p,I}.
    pub fn to_file_string(&self) -> String {
        let fmt_vec = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!("m {}\n", self.t);
        if self.ambient != self.t {
            out.push_str(&format!("ambient {}\n", self.ambient));
        }
        out.push_str(&format!("f0 {}\n", fmt_vec(&self.f0)));
        out.push_str(&format!("g0 {}\n", fmt_vec(&self.g0)));
        out.push_str(&format!("nu {}\n", fmt_vec(&self.nu)));
        for (f, g) in &self.conditions {
            out.push_str(&format!("cond {} | {}\n", fmt_vec(f), fmt_vec(g)));
        }
        if let Some(counts) = &self.component_counts {
            for (set, poly) in counts {
                let mask: u64 = set.iter().fold(0, |acc, &i| acc | (1 << i));
                let terms: Vec<String> =
                    poly.iter().map(|(c, e)| format!("{}*p^{}", c, e)).collect();
                out.push_str(&format!("cpoly {} {}\n", mask, terms.join("+")));
            }
        }
        out
    }

    pub fn from_file_string(text: &str) -> Result<Self, CondError> {
        let mut t: Option<usize> = None;
        let mut ambient: Option<usize> = None;
        let mut f0: Option<Vec<u32>> = None;
        let mut g0: Option<Vec<u32>> = None;
        let mut nu: Option<Vec<u32>> = None;
        let mut conditions: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
        let mut counts: BTreeMap<BTreeSet<usize>, Vec<(i64, u32)>> = BTreeMap::new();
        let parse_vec = |s: &str| -> Result<Vec<u32>, CondError> {
            s.split_whitespace()
                .map(|x| {
                    x.parse()
                        .map_err(|_| CondError::Parse(format!("bad vector entry: {}", x)))
                })
                .collect()
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match key {
                "m" => {
                    t = Some(rest.trim().parse().map_err(|_| CondError::Parse("bad m".into()))?)
                }
                "ambient" => {
                    ambient = Some(
                        rest.trim().parse().map_err(|_| CondError::Parse("bad ambient".into()))?,
                    )
                }
                "f0" => f0 = Some(parse_vec(rest)?),
                "g0" => g0 = Some(parse_vec(rest)?),
                "nu" => nu = Some(parse_vec(rest)?),
                "cond" => {
                    let (l, r) = rest
                        .split_once('|')
                        .ok_or_else(|| CondError::Parse("cond line needs `|`".into()))?;
                    conditions.push((parse_vec(l)?, parse_vec(r)?));
                }
                "cpoly" => {
                    let mut it = rest.split_whitespace();
                    let mask: u64 = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| CondError::Parse("bad cpoly mask".into()))?;
                    let poly_text =
                        it.next().ok_or_else(|| CondError::Parse("missing cpoly polynomial".into()))?;
                    let mut poly = Vec::new();
                    for term in poly_text.split('+') {
                        let (c, e) = term
                            .split_once("*p^")
                            .ok_or_else(|| CondError::Parse(format!("bad cpoly term: {}", term)))?;
                        poly.push((
                            c.parse().map_err(|_| CondError::Parse("bad cpoly coefficient".into()))?,
                            e.parse().map_err(|_| CondError::Parse("bad cpoly exponent".into()))?,
                        ));
                    }
                    let set: BTreeSet<usize> = (0..64).filter(|i| mask & (1 << i) != 0).collect();
                    counts.insert(set, poly);
                }
                _ => return Err(CondError::Parse(format!("unknown line: {}", line))),
            }
        }
        let t = t.ok_or_else(|| CondError::Parse("missing m line".into()))?;
        let f0 = f0.ok_or_else(|| CondError::Parse("missing f0".into()))?;
        let g0 = g0.ok_or_else(|| CondError::Parse("missing g0".into()))?;
        let nu = nu.unwrap_or_else(|| vec![1; t]);
        let has_counts = !counts.is_empty();
        let ambient = ambient.unwrap_or(t);
        let data = ConeIntegralData {
            t,
            ambient,
            f0,
            g0,
            nu,
            conditions,
            provenance: if has_counts || ambient != t {
                Provenance::ResolutionData
            } else {
                Provenance::UserSupplied
            },
            exceptional_primes: BTreeSet::new(),
            component_counts: if has_counts { Some(counts) } else { None },
        };
        data.validate()?;
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn prefix_diag_monomial(d: usize, k: usize) -> Vec<u16> {
        let mut v = vec![0u16; var_count(d)];
        for i in 0..k {
            v[var_index(d, i, i)] = 1;
        }
        v
    }

    #[test]
    fn natural_adjoint_d1() {
        let nat = natural_adjoint(1);
        assert_eq!(nat[0][0], SymPoly::constant(1, 1));
    }

    #[test]
    fn natural_adjoint_d2() {
        // M^♮ = [[1, -m12], [0, m11]]
        let nat = natural_adjoint(2);
        let n = var_count(2);
        assert_eq!(nat[0][0], SymPoly::constant(n, 1));
        assert_eq!(nat[0][1], SymPoly::var(n, var_index(2, 0, 1)).neg());
        assert!(nat[1][0].is_zero());
        assert_eq!(nat[1][1], SymPoly::var(n, var_index(2, 0, 0)));
    }

    #[test]
    fn natural_adjoint_d3_corner_entry() {
        // entry (1,3) = m12 m23 - m13 m22
        let nat = natural_adjoint(3);
        let n = var_count(3);
        let m12 = SymPoly::var(n, var_index(3, 0, 1));
        let m23 = SymPoly::var(n, var_index(3, 1, 2));
        let m13 = SymPoly::var(n, var_index(3, 0, 2));
        let m22 = SymPoly::var(n, var_index(3, 1, 1));
        let expected = m12.mul(&m23).add(&m13.mul(&m22).neg());
        assert_eq!(nat[0][2], expected);
    }

    #[test]
    fn m_times_natural_adjoint_is_prefix_diag() {
        for d in 1..=4 {
            let m = generic_upper_triangular(d);
            let nat = natural_adjoint(d);
            let prod = sym_mat_mul(&m, &nat);
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        let expected = SymPoly::monomial(
                            var_count(d),
                            BigInt::one(),
                            prefix_diag_monomial(d, i + 1),
                        );
                        assert_eq!(prod[i][j], expected, "d={} diag {}", d, i);
                    } else {
                        assert!(prod[i][j].is_zero(), "d={} entry ({},{})", d, i, j);
                    }
                }
            }
        }
    }

    #[test]
    fn zd_conditions_empty() {
        let sc = StructureConstants::builtin("zd(3)").unwrap();
        for kind in [CountKind::Subring, CountKind::Ideal] {
            let cs = derive_conditions(&sc, kind);
            assert!(cs.is_empty());
            let data = classify(&cs).unwrap();
            assert_eq!(data.t, 6);
            assert!(data.conditions.is_empty());
            assert!(data.exceptional_primes.is_empty());
        }
    }

    #[test]
    fn heisenberg_subring_condition() {
        // single class equivalent to v(m33) <= v(m11 m22)
        let sc = StructureConstants::builtin("heisenberg").unwrap();
        let cs = derive_conditions(&sc, CountKind::Subring);
        assert_eq!(cs.conditions.len(), 1);
        let cond = &cs.conditions[0];
        assert_eq!(cond.k, 3);
        let n = var_count(3);
        let m11 = SymPoly::var(n, var_index(3, 0, 0));
        let m22 = SymPoly::var(n, var_index(3, 1, 1));
        let sq = m11.mul(&m22);
        assert_eq!(cond.g, sq.mul(&sq));
        let data = classify(&cs).unwrap();
        assert_eq!(data.conditions.len(), 1);
        // v(m11 m22 m33) <= v((m11 m22)^2), i.e. x6 <= x1 + x4 after cancelling
        assert_eq!(data.conditions[0].0, vec![1, 0, 0, 1, 0, 1]);
        assert_eq!(data.conditions[0].1, vec![2, 0, 0, 2, 0, 0]);
        assert!(data.exceptional_primes.is_empty());
    }

    #[test]
    fn heisenberg_ideal_conditions() {
        // v(m33) <= v(m11), v(m33) <= v(m12), v(m33) <= v(m22)
        let sc = StructureConstants::builtin("heisenberg").unwrap();
        let cs = derive_conditions(&sc, CountKind::Ideal);
        assert_eq!(cs.conditions.len(), 3);
        for cond in &cs.conditions {
            assert_eq!(cond.k, 3);
        }
        let data = classify(&cs).unwrap();
        let mut gs: Vec<Vec<u32>> = data.conditions.iter().map(|(_, g)| g.clone()).collect();
        gs.sort();
        // g exponent vectors: m11^2 m22, m11 m12 m22, m11 m22^2 over
        // variables (m11, m12, m13, m22, m23, m33)
        let mut expected = vec![
            vec![2, 0, 0, 1, 0, 0],
            vec![1, 1, 0, 1, 0, 0],
            vec![1, 0, 0, 2, 0, 0],
        ];
        expected.sort();
        assert_eq!(gs, expected);
    }

    #[test]
    fn degree_claims() {
        // ideal g's are homogeneous of degree k, subring of degree k+1
        for name in ["heisenberg", "sl2", "f23"] {
            let sc = StructureConstants::builtin(name).unwrap();
            for kind in [CountKind::Subring, CountKind::Ideal] {
                let cs = derive_conditions(&sc, kind);
                assert!(!cs.is_empty());
                for cond in &cs.conditions {
                    assert!(cond.g.is_homogeneous(), "{} {:?}", name, kind);
                    let expected = match kind {
                        CountKind::Ideal => cond.k as u32,
                        CountKind::Subring => cond.k as u32 + 1,
                    };
                    assert_eq!(
                        cond.g.total_degree(),
                        Some(expected),
                        "{} {:?} k={}",
                        name,
                        kind,
                        cond.k
                    );
                }
            }
        }
    }

    #[test]
    fn sl2_subring_is_non_monomial() {
        let sc = StructureConstants::builtin("sl2").unwrap();
        let cs = derive_conditions(&sc, CountKind::Subring);
        let report = classify(&cs).unwrap_err();
        assert!(!report.offenders.is_empty());
        let text = report.to_string();
        assert!(text.contains("not monomial"));
    }

    #[test]
    fn semantic_soundness_heisenberg() {
        // the derived valuation conditions hold on an HNF basis iff the
        // enumeration's closure test accepts it — exhaustive at desk scale
        let sc = StructureConstants::builtin("heisenberg").unwrap();
        for kind in [CountKind::Subring, CountKind::Ideal] {
            let cs = derive_conditions(&sc, kind);
            let data = classify(&cs).unwrap();
            for p in [2u64, 3] {
                for n in 0..=3 {
                    let by_conditions = count_by_valuation_conditions(&sc, &data, p, n);
                    let by_oracle = oracle::count_lattices(&sc, p, n, kind, None).unwrap();
                    assert_eq!(by_conditions, by_oracle, "{:?} p={} n={}", kind, p, n);
                }
            }
        }
    }

    /// Count HNF matrices satisfying the derived valuation conditions on
    /// their entries — independent of both the cone engine and the
    /// oracle's membership test.
    fn count_by_valuation_conditions(
        sc: &StructureConstants,
        data: &ConeIntegralData,
        p: u64,
        n: u32,
    ) -> u64 {
        let d = sc.d;
        fn compositions(n: u32, d: usize) -> Vec<Vec<u32>> {
            if d == 1 {
                return vec![vec![n]];
            }
            let mut out = Vec::new();
            for a in 0..=n {
                for mut rest in compositions(n - a, d - 1) {
                    let mut v = vec![a];
                    v.append(&mut rest);
                    out.push(v);
                }
            }
            out
        }
        let vp = |x: u64| -> Option<u32> {
            if x == 0 {
                return None; // v(0) = ∞
            }
            let mut v = 0;
            let mut x = x;
            while x % p == 0 {
                x /= p;
                v += 1;
            }
            Some(v)
        };
        let mut count = 0u64;
        for diag in compositions(n, d) {
            let slots: Vec<(usize, usize)> =
                (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
            let radix: Vec<u64> = slots.iter().map(|&(_, j)| p.pow(diag[j])).collect();
            let mut digits = vec![0u64; slots.len()];
            loop {
                let mut vals: Vec<Option<u32>> = vec![None; var_count(d)];
                for i in 0..d {
                    vals[var_index(d, i, i)] = Some(diag[i]);
                }
                for (s, &(i, j)) in slots.iter().enumerate() {
                    vals[var_index(d, i, j)] = vp(digits[s]);
                }
                let ok = data.conditions.iter().all(|(f, g)| {
                    let vf: u32 = f
                        .iter()
                        .enumerate()
                        .filter(|(_, &e)| e > 0)
                        .map(|(idx, &e)| e * vals[idx].expect("f touches only diagonal entries"))
                        .sum();
                    let mut vg: Option<u32> = Some(0);
                    for (idx, &e) in g.iter().enumerate() {
                        if e == 0 {
                            continue;
                        }
                        vg = match (vg, vals[idx]) {
                            (Some(acc), Some(v)) => Some(acc + e * v),
                            _ => None,
                        };
                    }
                    match vg {
                        None => true,
                        Some(vg) => vf <= vg,
                    }
                });
                if ok {
                    count += 1;
                }
                let mut s = 0;
                while s < slots.len() {
                    digits[s] += 1;
                    if digits[s] < radix[s] {
                        break;
                    }
                    digits[s] = 0;
                    s += 1;
                }
                if s == slots.len() {
                    break;
                }
            }
        }
        count
    }

    #[test]
    fn f_polynomial_shapes() {
        // zd(2): prefactor only, m11^10 m22^5
        let sc = StructureConstants::builtin("zd(2)").unwrap();
        let f = f_polynomial(&sc, CountKind::Subring);
        let n = var_count(2);
        let mut exps = vec![0u16; n];
        exps[var_index(2, 0, 0)] = 10;
        exps[var_index(2, 1, 1)] = 5;
        assert_eq!(f, SymPoly::monomial(n, BigInt::one(), exps));
        // d = 1: m11^2
        let sc1 = StructureConstants::builtin("zd(1)").unwrap();
        let f1 = f_polynomial(&sc1, CountKind::Subring);
        assert_eq!(f1, SymPoly::monomial(1, BigInt::one(), vec![2]));
    }

    #[test]
    fn f_polynomial_heisenberg_divisibility() {
        let sc = StructureConstants::builtin("heisenberg").unwrap();
        let f = f_polynomial(&sc, CountKind::Subring);
        let probe = prefix_diag_monomial(3, 3);
        let (_, exps) = f.as_monomial().expect("heisenberg F is a monomial");
        assert!(exps.iter().zip(&probe).all(|(a, b)| a >= b));
        // divisible by the g of the derived condition
        let cs = derive_conditions(&sc, CountKind::Subring);
        let (_, g_exps) = cs.conditions[0].g.as_monomial().unwrap();
        assert!(exps.iter().zip(&g_exps).all(|(a, b)| a >= b));
    }

    #[test]
    fn cone_data_file_roundtrip() {
        let sc = StructureConstants::builtin("heisenberg").unwrap();
        let data = classify(&derive_conditions(&sc, CountKind::Subring)).unwrap();
        let text = data.to_file_string();
        let back = ConeIntegralData::from_file_string(&text).unwrap();
        assert_eq!(back.f0, data.f0);
        assert_eq!(back.g0, data.g0);
        assert_eq!(back.nu, data.nu);
        assert_eq!(back.conditions, data.conditions);
        assert_eq!(back.to_file_string(), text);
    }

    #[test]
    fn cone_data_file_with_counts() {
        let text = "m 2\nambient 3\nf0 1 0\ng0 0 1\nnu 1 2\ncond 1 0 | 0 1\ncpoly 3 1*p^2+-1*p^1\n";
        let data = ConeIntegralData::from_file_string(text).unwrap();
        assert_eq!(data.t, 2);
        assert_eq!(data.ambient, 3);
        assert_eq!(data.provenance, Provenance::ResolutionData);
        let counts = data.component_counts.unwrap();
        let key: BTreeSet<usize> = [0usize, 1].into_iter().collect();
        assert_eq!(counts[&key], vec![(1, 2), (-1, 1)]);
    }

    #[test]
    fn constant_f0_rejected() {
        let text = "m 1\nf0 0\ng0 1\nnu 1\n";
        assert!(ConeIntegralData::from_file_string(text).is_err());
    }
}
