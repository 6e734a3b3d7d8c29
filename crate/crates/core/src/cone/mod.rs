//! The core engine: build the closed polyhedral cone cut out by the
//! valuation conditions, stratify it by coordinate support, decompose
//! each piece into lattice-point-exact half-open simplicial cones, and
//! assemble the local factor as an exact rational function in (p, t).
//!
//! The assembly follows the stratified sum
//!   Z = Σ_I c_{p,I} · p^{-(m-|I|)} (1-p^{-1})^{|I|} · G_I
//! where G_I is the generating function of the lattice points whose
//! support is exactly I.  G_I comes from inclusion–exclusion over the
//! closed coordinate faces, and the stratified sum is folded into one
//! weighted sum over faces, so strata whose weights cancel cost nothing.

mod intlin;
mod triangulate;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

pub use triangulate::{decompose, locate, SimplicialPiece};

use crate::conditions::ConeIntegralData;
use crate::exact::{BivarPoly, BivariateRational};

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("dimension mismatch in cone data: {0}")]
    Dimension(String),
    #[error("cone dimension {0} exceeds the supported limit of 12 variables")]
    TooLarge(usize),
    #[error("missing component count c_(p,I) for nonempty stratum {0:?}")]
    MissingComponentCount(BTreeSet<usize>),
    #[error("every exponent of f0 is zero: the integral is the excluded constant case")]
    ConstantIntegral,
}

/// c_{p,I} for every component subset I.
#[derive(Clone, Debug)]
pub enum ComponentCounts {
    /// monomial case: c_{p,I} = (p-1)^{t-|I|}
    MonomialAuto,
    /// user-supplied polynomials in p
    Explicit(BTreeMap<BTreeSet<usize>, BivarPoly>),
}

impl ComponentCounts {
    pub fn get(&self, t: usize, set: &BTreeSet<usize>) -> Option<BivarPoly> {
        match self {
            ComponentCounts::MonomialAuto => Some(p_minus_one_pow(t - set.len())),
            ComponentCounts::Explicit(map) => map.get(set).cloned(),
        }
    }
}

fn p_minus_one_pow(e: usize) -> BivarPoly {
    let mut base = BivarPoly::monomial(BigRational::one(), 1, 0);
    base.add_term(-BigRational::one(), 0, 0);
    base.pow(e as u32)
}

/// The closed cone with its extreme rays and integrand weights.
pub struct ConeSystem {
    /// number of variables / components
    pub t: usize,
    /// ambient integration dimension m
    pub ambient: usize,
    /// inequality rows r meaning r·x ≥ 0 (already g - f)
    pub inequalities: Vec<Vec<i64>>,
    /// primitive extreme rays
    pub rays: Vec<Vec<i64>>,
    /// t-exponent weight per coordinate: N_j(f0)
    pub weight_t: Vec<u32>,
    /// p-exponent weight per coordinate: N_j(g0) + ν_j
    pub weight_p: Vec<u32>,
    data: ConeIntegralData,
    face_cache: RefCell<BTreeMap<Vec<usize>, (Vec<SimplicialPiece>, BivariateRational)>>,
}

/// Extreme-ray computation by double description: start from the orthant
/// and cut by one inequality at a time, keeping nonnegative rays and
/// combining adjacent (+,−) pairs.
fn double_description(t: usize, inequalities: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut rays: Vec<Vec<i64>> = (0..t)
        .map(|i| {
            let mut v = vec![0i64; t];
            v[i] = 1;
            v
        })
        .collect();
    // constraints seen so far: orthant facets plus processed inequalities
    let mut constraints: Vec<Vec<i64>> = (0..t)
        .map(|i| {
            let mut v = vec![0i64; t];
            v[i] = 1;
            v
        })
        .collect();
    for h in inequalities {
        let val = |r: &[i64]| -> i64 { r.iter().zip(h).map(|(a, b)| a * b).sum() };
        let zero_set = |r: &[i64]| -> BTreeSet<usize> {
            constraints
                .iter()
                .enumerate()
                .filter(|(_, c)| r.iter().zip(c.iter()).map(|(a, b)| a * b).sum::<i64>() == 0)
                .map(|(i, _)| i)
                .collect()
        };
        let pos: Vec<Vec<i64>> = rays.iter().filter(|r| val(r) > 0).cloned().collect();
        let zero: Vec<Vec<i64>> = rays.iter().filter(|r| val(r) == 0).cloned().collect();
        let neg: Vec<Vec<i64>> = rays.iter().filter(|r| val(r) < 0).cloned().collect();
        let mut next = pos.clone();
        next.extend(zero.clone());
        for rp in &pos {
            for rn in &neg {
                // combinatorial adjacency: no third ray is tight on every
                // constraint tight at both rp and rn
                let common: BTreeSet<usize> =
                    zero_set(rp).intersection(&zero_set(rn)).cloned().collect();
                let blocked = rays.iter().any(|r| {
                    r != rp
                        && r != rn
                        && common.iter().all(|&ci| {
                            r.iter().zip(&constraints[ci]).map(|(a, b)| a * b).sum::<i64>() == 0
                        })
                });
                if blocked {
                    continue;
                }
                let (vp, vn) = (val(rp), val(rn));
                let mut w: Vec<i64> = rp.iter().zip(rn).map(|(a, b)| (-vn) * a + vp * b).collect();
                let g = w.iter().fold(0i64, |acc, &x| num_integer::gcd(acc, x));
                if g > 1 {
                    for x in w.iter_mut() {
                        *x /= g;
                    }
                }
                if !next.contains(&w) {
                    next.push(w);
                }
            }
        }
        rays = next;
        constraints.push(h.clone());
    }
    rays.sort();
    rays.dedup();
    rays
}

/// Extremality: the constraints tight at the ray span a hyperplane.
pub fn is_extreme(t: usize, inequalities: &[Vec<i64>], ray: &[i64]) -> bool {
    let mut tight: Vec<Vec<i64>> = Vec::new();
    for i in 0..t {
        if ray[i] == 0 {
            let mut v = vec![0i64; t];
            v[i] = 1;
            tight.push(v);
        }
    }
    for h in inequalities {
        if h.iter().zip(ray).map(|(a, b)| a * b).sum::<i64>() == 0 {
            tight.push(h.clone());
        }
    }
    intlin::rank_rows(&tight) == t - 1
}

pub fn build_cone(data: &ConeIntegralData) -> Result<ConeSystem, ConeError> {
    let t = data.t;
    if t > 12 {
        return Err(ConeError::TooLarge(t));
    }
    for v in [&data.f0, &data.g0, &data.nu] {
        if v.len() != t {
            return Err(ConeError::Dimension("integrand vector length != t".into()));
        }
    }
    if data.f0.iter().all(|&x| x == 0) {
        return Err(ConeError::ConstantIntegral);
    }
    let mut inequalities: Vec<Vec<i64>> = Vec::new();
    for (f, g) in &data.conditions {
        if f.len() != t || g.len() != t {
            return Err(ConeError::Dimension("condition vector length != t".into()));
        }
        let row: Vec<i64> = g.iter().zip(f).map(|(&g, &f)| g as i64 - f as i64).collect();
        // vacuous conditions drop out before ray computation
        if row.iter().all(|&x| x >= 0) {
            continue;
        }
        if !inequalities.contains(&row) {
            inequalities.push(row);
        }
    }
    let rays = double_description(t, &inequalities);
    debug_assert!(rays.iter().all(|r| is_extreme(t, &inequalities, r)));
    debug_assert!(rays.iter().all(|r| r.iter().all(|&x| x >= 0)), "cone must be pointed");
    let weight_t = data.f0.clone();
    let weight_p: Vec<u32> = data.g0.iter().zip(&data.nu).map(|(&g, &n)| g + n).collect();
    Ok(ConeSystem {
        t,
        ambient: data.ambient,
        inequalities,
        rays,
        weight_t,
        weight_p,
        data: data.clone(),
        face_cache: RefCell::new(BTreeMap::new()),
    })
}

impl ConeSystem {
    pub fn data(&self) -> &ConeIntegralData {
        &self.data
    }

    /// Membership of a lattice point in the closed cone.
    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter().all(|&c| c >= 0)
            && self
                .inequalities
                .iter()
                .all(|h| h.iter().zip(x).map(|(a, b)| a * b).sum::<i64>() >= 0)
    }

    /// (Σ x_j N_j(f0), Σ x_j (N_j(g0)+ν_j)): t- and p-exponents of a point.
    pub fn weights_of(&self, x: &[i64]) -> (u64, u64) {
        let a = x.iter().zip(&self.weight_t).map(|(&c, &w)| c as u64 * w as u64).sum();
        let b = x.iter().zip(&self.weight_p).map(|(&c, &w)| c as u64 * w as u64).sum();
        (a, b)
    }

    fn monomial_of(&self, x: &[i64]) -> BivarPoly {
        let (a, b) = self.weights_of(x);
        BivarPoly::monomial(BigRational::one(), -(b as i64), a as u32)
    }

    /// Rays supported inside the coordinate subset.
    fn face_ray_indices(&self, support: &BTreeSet<usize>) -> Vec<usize> {
        self.rays
            .iter()
            .enumerate()
            .filter(|(_, r)| r.iter().enumerate().all(|(i, &c)| c == 0 || support.contains(&i)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Decomposition and generating function of the closed face x_i = 0
    /// for i outside `support`; cached by the face's ray set.
    pub fn face_genfun(
        &self,
        support: &BTreeSet<usize>,
    ) -> (Vec<SimplicialPiece>, BivariateRational) {
        let idxs = self.face_ray_indices(support);
        if let Some(hit) = self.face_cache.borrow().get(&idxs) {
            return hit.clone();
        }
        let rays: Vec<Vec<i64>> = idxs.iter().map(|&i| self.rays[i].clone()).collect();
        let mut pieces = decompose(&rays);
        for piece in pieces.iter_mut() {
            // re-index generators into the full ray list
            piece.ray_indices = piece.ray_indices.iter().map(|&i| idxs[i]).collect();
        }
        let mut total = BivariateRational::zero();
        for piece in &pieces {
            let mut num = BivarPoly::zero();
            for pt in &piece.parallelepiped {
                num = &num + &self.monomial_of(pt);
            }
            let mut gf = BivariateRational::from_poly(num);
            for g in &piece.generators {
                let (a, b) = self.weights_of(g);
                gf = gf.div_factor(-(b as i64), a as u32, 1);
            }
            total = total.add(&gf);
        }
        let result = (pieces, total);
        self.face_cache.borrow_mut().insert(idxs, result.clone());
        result
    }

    /// Generating function of the lattice points with support exactly I:
    /// inclusion–exclusion over closed faces.
    pub fn stratum_genfun(&self, stratum: &BTreeSet<usize>) -> BivariateRational {
        let mut total = BivariateRational::zero();
        for sub in subsets(stratum) {
            let (_, gf) = self.face_genfun(&sub);
            let sign = if (stratum.len() - sub.len()) % 2 == 0 {
                BigRational::one()
            } else {
                -BigRational::one()
            };
            total = total.add(&gf.scale(&sign));
        }
        total.normalize()
    }

    /// Nonemptiness of the open stratum: the rays supported in I must
    /// jointly cover every coordinate of I.
    pub fn stratum_nonempty(&self, stratum: &BTreeSet<usize>) -> bool {
        let mut union: BTreeSet<usize> = BTreeSet::new();
        for &i in &self.face_ray_indices(stratum) {
            for (c, &v) in self.rays[i].iter().enumerate() {
                if v != 0 {
                    union.insert(c);
                }
            }
        }
        union == *stratum
    }

    /// All simplicial pieces of the full-cone decomposition.
    pub fn full_decomposition(&self) -> Vec<SimplicialPiece> {
        let all: BTreeSet<usize> = (0..self.t).collect();
        self.face_genfun(&all).0
    }
}

pub fn subsets(set: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
    let elems: Vec<usize> = set.iter().cloned().collect();
    let mut out = Vec::with_capacity(1 << elems.len());
    for mask in 0u64..(1 << elems.len()) {
        out.push(
            elems
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &e)| e)
                .collect(),
        );
    }
    out
}

/// The assembled local integral and, for ring-derived data, the local
/// zeta factor obtained by the s ↦ s − d shift and unit normalization.
#[derive(Clone, Debug)]
pub struct LocalFactor {
    /// Z_D(s, p), normalized
    pub z: BivariateRational,
    /// ζ*_{L,p}(s) = (1−p^{-1})^{-d} Z(s−d, p) for ring-derived data
    pub zeta_star: Option<BivariateRational>,
}

pub fn local_factor(cs: &ConeSystem, counts: &ComponentCounts) -> Result<LocalFactor, ConeError> {
    let t = cs.t;
    let m = cs.ambient;
    let all: BTreeSet<usize> = (0..t).collect();
    // stratum scalar: c_{p,I} p^{-(m-|I|)} (1-p^{-1})^{|I|}
    let mut scalars: BTreeMap<BTreeSet<usize>, BivarPoly> = BTreeMap::new();
    for stratum in subsets(&all) {
        let c = match counts.get(t, &stratum) {
            Some(c) => c,
            None => {
                if cs.stratum_nonempty(&stratum) {
                    return Err(ConeError::MissingComponentCount(stratum));
                }
                continue;
            }
        };
        let card = stratum.len();
        let scalar =
            &c.mul_monomial(-((m - card) as i64), 0) * &BivarPoly::one_minus(-1, 0).pow(card as u32);
        scalars.insert(stratum, scalar);
    }
    // fold the inclusion–exclusion: Z = Σ_J w_J · Ḡ_J with
    // w_J = Σ_{I ⊇ J} (-1)^{|I \ J|} scalar_I
    let mut z = BivariateRational::zero();
    for face in subsets(&all) {
        let mut w = BivarPoly::zero();
        let rest: BTreeSet<usize> = all.difference(&face).cloned().collect();
        for extra in subsets(&rest) {
            let stratum: BTreeSet<usize> = face.union(&extra).cloned().collect();
            if let Some(s) = scalars.get(&stratum) {
                if extra.len() % 2 == 0 {
                    w = &w + s;
                } else {
                    w = &w - s;
                }
            }
        }
        if w.is_zero() {
            continue;
        }
        let (_, gf) = cs.face_genfun(&face);
        z = z.add(&gf.mul_poly(&w));
    }
    let z = z.normalize();
    let zeta_star = cs
        .data
        .ring_rank()
        .map(|d| z.shift_t(d as i64).div_factor(-1, 0, d as u32).normalize());
    Ok(LocalFactor { z, zeta_star })
}

/// Component counts from the data: automatic in the monomial case,
/// user-supplied for resolution data.
pub fn component_counts(data: &ConeIntegralData) -> ComponentCounts {
    match &data.component_counts {
        Some(map) => {
            let converted = map
                .iter()
                .map(|(k, poly)| {
                    let mut p = BivarPoly::zero();
                    for &(c, e) in poly {
                        p.add_term(BigRational::from_integer(BigInt::from(c)), e as i64, 0);
                    }
                    (k.clone(), p)
                })
                .collect();
            ComponentCounts::Explicit(converted)
        }
        None => ComponentCounts::MonomialAuto,
    }
}

/// Full pipeline from cone data to the local factor.
pub fn local_factor_from_data(data: &ConeIntegralData) -> Result<LocalFactor, ConeError> {
    let cs = build_cone(data)?;
    let counts = component_counts(data);
    local_factor(&cs, &counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{classify, derive_conditions, ConeIntegralData, Provenance};
    use crate::rings::{CountKind, StructureConstants};

    fn heisenberg_subring_data() -> ConeIntegralData {
        let sc = StructureConstants::builtin("heisenberg").unwrap();
        classify(&derive_conditions(&sc, CountKind::Subring)).unwrap()
    }

    fn plain_data(t: usize, f0: Vec<u32>, g0: Vec<u32>, conds: Vec<(Vec<u32>, Vec<u32>)>) -> ConeIntegralData {
        ConeIntegralData {
            t,
            ambient: t,
            f0,
            g0,
            nu: vec![1; t],
            conditions: conds,
            provenance: Provenance::UserSupplied,
            exceptional_primes: Default::default(),
            component_counts: None,
        }
    }

    #[test]
    fn orthant_rays_without_conditions() {
        let sc = StructureConstants::builtin("zd(2)").unwrap();
        let data = classify(&derive_conditions(&sc, CountKind::Subring)).unwrap();
        let cs = build_cone(&data).unwrap();
        assert_eq!(cs.rays.len(), 3);
        for r in &cs.rays {
            assert_eq!(r.iter().filter(|&&x| x != 0).count(), 1);
        }
    }

    #[test]
    fn heisenberg_subring_rays() {
        // condition x6 <= x1 + x4 gives 7 rays: e1..e5, e1+e6, e4+e6
        let data = heisenberg_subring_data();
        let cs = build_cone(&data).unwrap();
        assert_eq!(cs.t, 6);
        let mut rays = cs.rays.clone();
        rays.sort();
        let mut expected = vec![
            vec![1, 0, 0, 0, 0, 0],
            vec![0, 1, 0, 0, 0, 0],
            vec![0, 0, 1, 0, 0, 0],
            vec![0, 0, 0, 1, 0, 0],
            vec![0, 0, 0, 0, 1, 0],
            vec![1, 0, 0, 0, 0, 1],
            vec![0, 0, 0, 1, 0, 1],
        ];
        expected.sort();
        assert_eq!(rays, expected);
        for r in &cs.rays {
            assert!(is_extreme(cs.t, &cs.inequalities, r));
        }
    }

    #[test]
    fn vacuous_condition_dropped() {
        // x1 <= x1 keeps the plain orthant
        let mut data = heisenberg_subring_data();
        data.conditions = vec![(vec![1, 0, 0, 0, 0, 0], vec![1, 0, 0, 0, 0, 0])];
        let cs = build_cone(&data).unwrap();
        assert!(cs.inequalities.is_empty());
        assert_eq!(cs.rays.len(), 6);
    }

    #[test]
    fn single_orthant_stratum_genfun() {
        // t = 1, f0 = (1), g0 = (0), nu = (1):
        // G_{1} = p^{-1} t / (1 - p^{-1} t), G_∅ = 1
        let data = plain_data(1, vec![1], vec![0], vec![]);
        let cs = build_cone(&data).unwrap();
        let s: BTreeSet<usize> = [0].into_iter().collect();
        let g = cs.stratum_genfun(&s);
        let expected = BivariateRational::new(
            BivarPoly::monomial(BigRational::one(), -1, 1),
            [(-1, 1, 1)],
        );
        assert!(g.eq_as_function(&expected), "got {}", g);
        let g0 = cs.stratum_genfun(&BTreeSet::new());
        assert!(g0.eq_as_function(&BivariateRational::one()));
    }

    #[test]
    fn scalar_integral_example() {
        // ∫_{Z_p} |x|^s dx = (1 - p^{-1}) / (1 - p^{-1} t)
        let data = plain_data(1, vec![1], vec![0], vec![]);
        let lf = local_factor_from_data(&data).unwrap();
        let expected = BivariateRational::new(BivarPoly::one_minus(-1, 0), [(-1, 1, 1)]);
        assert!(lf.z.eq_as_function(&expected), "got {}", lf.z);
        assert!(lf.zeta_star.is_none());
    }

    #[test]
    fn zd_pipeline_closed_form() {
        // ζ_{Z^d, p} = Π_{i=0}^{d-1} (1 - p^i t)^{-1}
        for d in 1..=3usize {
            let sc = StructureConstants::builtin(&format!("zd({})", d)).unwrap();
            let data = classify(&derive_conditions(&sc, CountKind::Subring)).unwrap();
            let lf = local_factor_from_data(&data).unwrap();
            let zeta = lf.zeta_star.expect("ring-derived");
            let expected = BivariateRational::new(
                BivarPoly::one(),
                (0..d).map(|i| (i as i64, 1u32, 1u32)),
            );
            assert!(zeta.eq_as_function(&expected), "d={}: got {}", d, zeta);
        }
    }

    #[test]
    fn heisenberg_subring_closed_form() {
        // Euler factor of ζ(s)ζ(s-1)ζ(2s-2)ζ(2s-3)/ζ(3s-3)
        let data = heisenberg_subring_data();
        let lf = local_factor_from_data(&data).unwrap();
        let zeta = lf.zeta_star.expect("ring-derived");
        let expected = BivariateRational::new(
            BivarPoly::one_minus(3, 3),
            [(0, 1, 1), (1, 1, 1), (2, 2, 1), (3, 2, 1)],
        );
        assert!(zeta.eq_as_function(&expected), "got {}", zeta);
    }

    #[test]
    fn heisenberg_ideal_closed_form() {
        // the symbolic pipeline gives the factor of ζ(s)ζ(s-1)ζ(3s-2);
        // the enumeration cross-check lives in the integration tests
        let sc = StructureConstants::builtin("heisenberg").unwrap();
        let data = classify(&derive_conditions(&sc, CountKind::Ideal)).unwrap();
        let lf = local_factor_from_data(&data).unwrap();
        let zeta = lf.zeta_star.expect("ring-derived");
        let expected =
            BivariateRational::new(BivarPoly::one(), [(0, 1, 1), (1, 1, 1), (2, 3, 1)]);
        assert!(zeta.eq_as_function(&expected), "got {}", zeta);
    }

    #[test]
    fn empty_cone_constant_integral() {
        // condition x1 <= 0 cuts the t=1 cone to the origin
        let data = plain_data(1, vec![1], vec![0], vec![(vec![1], vec![0])]);
        let cs = build_cone(&data).unwrap();
        assert!(cs.rays.is_empty());
        let lf = local_factor(&cs, &ComponentCounts::MonomialAuto).unwrap();
        // only the I = ∅ stratum survives: Z = p^{-1}(p-1) = 1 - p^{-1}
        let expected = BivariateRational::from_poly(BivarPoly::one_minus(-1, 0));
        assert!(lf.z.eq_as_function(&expected), "got {}", lf.z);
    }

    #[test]
    fn missing_component_count_detected() {
        let data = heisenberg_subring_data();
        let cs = build_cone(&data).unwrap();
        let err = local_factor(&cs, &ComponentCounts::Explicit(BTreeMap::new())).unwrap_err();
        assert!(matches!(err, ConeError::MissingComponentCount(_)));
    }

    #[test]
    fn specialize_matches_series() {
        let data = heisenberg_subring_data();
        let lf = local_factor_from_data(&data).unwrap();
        let zeta = lf.zeta_star.unwrap();
        let u = zeta.specialize(2);
        let series = u.series(4);
        let symbolic = zeta.series_expand(4);
        let two = BigRational::from_integer(BigInt::from(2));
        for n in 0..=4u32 {
            assert_eq!(
                symbolic.coefficient(n).eval(&two, &BigRational::one()),
                series[n as usize]
            );
        }
    }

    #[test]
    fn triangulation_order_independence() {
        // permuting the stored ray order must not change any stratum value
        let data = heisenberg_subring_data();
        let cs = build_cone(&data).unwrap();
        let mut cs2 = build_cone(&data).unwrap();
        cs2.rays.reverse();
        let all: BTreeSet<usize> = (0..cs.t).collect();
        for stratum in [
            all.clone(),
            [0usize, 5].into_iter().collect(),
            [3usize, 5].into_iter().collect(),
            [0usize, 1, 3].into_iter().collect(),
        ] {
            let a = cs.stratum_genfun(&stratum);
            let b = cs2.stratum_genfun(&stratum);
            assert!(a.eq_as_function(&b), "stratum {:?}: {} vs {}", stratum, a, b);
        }
    }
}
