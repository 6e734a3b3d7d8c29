//! Lattice-point-exact decomposition of a pointed rational cone given by
//! its extreme rays: placing triangulation into simplicial cones, a
//! half-open marking that makes the pieces disjoint, and fundamental-
//! parallelepiped point enumeration for each piece.
//!
//! All work happens in coordinates of the saturated lattice
//! ℤ^t ∩ span(rays), where the cone is full-dimensional.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::intlin::{invert_unimodular, rank_rows, saturate, snf, solve_row_system, Q};

/// One half-open simplicial cone of the decomposition, in ambient t-space.
#[derive(Clone, Debug)]
pub struct SimplicialPiece {
    /// generator rays (primitive, linearly independent), ambient coords
    pub generators: Vec<Vec<i64>>,
    /// indices of the generators in the parent cone's ray list
    pub ray_indices: Vec<usize>,
    /// open facets: strict[j] = true means the coefficient of
    /// generators[j] must be > 0
    pub strict: Vec<bool>,
    /// lattice points of the half-open fundamental parallelepiped
    pub parallelepiped: Vec<Vec<i64>>,
}

impl SimplicialPiece {
    /// Multiplicity of a lattice point in this piece (0 or 1): the point's
    /// simplicial coordinates must be nonnegative and strict where marked.
    pub fn contains(&self, x: &[i64]) -> bool {
        let k = self.generators.len();
        if k == 0 {
            return x.iter().all(|&c| c == 0);
        }
        // solve λ · G = x over the span; reject when x is outside
        let rows: Vec<Vec<Q>> = self
            .generators
            .iter()
            .map(|g| g.iter().map(|&v| Q::from_integer(BigInt::from(v))).collect())
            .collect();
        let lambda = match solve_in_span(&rows, x) {
            Some(l) => l,
            None => return false,
        };
        for (j, l) in lambda.iter().enumerate() {
            if l.is_negative() {
                return false;
            }
            if self.strict[j] && l.is_zero() {
                return false;
            }
        }
        true
    }

    /// All lattice points of the piece with coordinates in [0, bound]^t.
    pub fn points_in_box(&self, bound: i64) -> Vec<Vec<i64>> {
        let t = self.generators.first().map_or(0, |g| g.len());
        let mut out = Vec::new();
        for base in &self.parallelepiped {
            if base.iter().any(|&c| c > bound) {
                continue;
            }
            let mut current = base.clone();
            dfs_points(&self.generators, 0, &mut current, bound, &mut out);
        }
        if self.generators.is_empty() && self.parallelepiped.len() == 1 {
            debug_assert_eq!(self.parallelepiped[0], vec![0; t]);
        }
        out
    }
}

fn dfs_points(
    gens: &[Vec<i64>],
    idx: usize,
    current: &mut Vec<i64>,
    bound: i64,
    out: &mut Vec<Vec<i64>>,
) {
    if idx == gens.len() {
        out.push(current.clone());
        return;
    }
    let mut steps = 0usize;
    loop {
        dfs_points(gens, idx + 1, current, bound, out);
        for (c, g) in current.iter_mut().zip(&gens[idx]) {
            *c += g;
        }
        steps += 1;
        if current.iter().any(|&c| c > bound) {
            break;
        }
    }
    for _ in 0..steps {
        for (c, g) in current.iter_mut().zip(&gens[idx]) {
            *c -= g;
        }
    }
}

/// Solve λ with λ·rows = x when x lies in the row span; None otherwise.
fn solve_in_span(rows: &[Vec<Q>], x: &[i64]) -> Option<Vec<Q>> {
    let k = rows.len();
    let t = rows[0].len();
    // Gaussian elimination on the transposed system
    let mut m: Vec<Vec<Q>> = (0..t)
        .map(|c| {
            let mut row: Vec<Q> = (0..k).map(|r| rows[r][c].clone()).collect();
            row.push(Q::from_integer(BigInt::from(x[c])));
            row
        })
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..k {
        let pivot = (rank..t).find(|&r| !m[r][col].is_zero());
        let Some(pr) = pivot else { continue };
        m.swap(rank, pr);
        let inv = m[rank][col].recip();
        for v in m[rank].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..t {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c2 in 0..=k {
                    let sub = &m[rank][c2] * &f;
                    m[r][c2] -= sub;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    // consistency: rows below rank must have zero rhs
    for r in rank..t {
        if !m[r][k].is_zero() {
            return None;
        }
    }
    if rank < k {
        return None; // dependent generators never occur here
    }
    let mut lambda = vec![Q::zero(); k];
    for (r, &col) in pivots.iter().enumerate() {
        lambda[col] = m[r][k].clone();
    }
    Some(lambda)
}

/// Decompose the closed cone spanned by `rays` (pairwise distinct
/// primitive vectors in the nonnegative orthant) into disjoint half-open
/// simplicial pieces covering every lattice point exactly once.  The
/// origin-only cone gives a single empty piece.
pub fn decompose(rays: &[Vec<i64>]) -> Vec<SimplicialPiece> {
    let t = rays.first().map_or(0, |r| r.len());
    if rays.is_empty() {
        return vec![SimplicialPiece {
            generators: Vec::new(),
            ray_indices: Vec::new(),
            strict: Vec::new(),
            parallelepiped: vec![vec![0; t]],
        }];
    }
    let k = rank_rows(rays);
    // saturated coordinates: every ray as an integer k-vector
    let (basis, _) = saturate(&independent_subset(rays, k));
    let coords: Vec<Vec<BigInt>> = rays
        .iter()
        .map(|r| to_coords(&basis, r).expect("ray lies in the span of the independent subset"))
        .collect();
    let simplices = placing_triangulation(&coords, k);
    // interior reference point for the half-open marking
    let xi: Vec<BigInt> = (0..k)
        .map(|j| coords.iter().map(|c| &c[j]).sum())
        .collect();
    let mut pieces = Vec::new();
    for simplex in &simplices {
        let gens_c: Vec<Vec<BigInt>> = simplex.iter().map(|&i| coords[i].clone()).collect();
        let mut strict = vec![false; k];
        for j in 0..k {
            // functional vanishing on the facet opposite generator j,
            // positive on generator j; facet is open iff the perturbed
            // interior point lies strictly on the negative side
            let mut rhs = vec![Q::zero(); k];
            rhs[j] = Q::one();
            let rows: Vec<Vec<Q>> = gens_c
                .iter()
                .map(|g| g.iter().map(|v| Q::from_integer(v.clone())).collect())
                .collect();
            // n with gens_c[i] · n = δ_ij: columns of the inverse
            let n = solve_row_system(&transpose_q(&rows), &rhs)
                .expect("simplex generators are independent");
            let sign = lex_sign(&n, &xi, &coords);
            if sign < 0 {
                strict[j] = true;
            }
            assert!(sign != 0, "perturbed interior point must avoid facet hyperplanes");
        }
        let pp = parallelepiped_points(&gens_c, &strict);
        // map back to ambient coordinates
        let generators: Vec<Vec<i64>> = simplex.iter().map(|&i| rays[i].clone()).collect();
        let parallelepiped: Vec<Vec<i64>> = pp
            .iter()
            .map(|mu| {
                (0..t)
                    .map(|c| {
                        let v: BigInt = (0..k).map(|b| &mu[b] * &basis[b][c]).sum();
                        i64::try_from(v).expect("lattice point fits in i64")
                    })
                    .collect()
            })
            .collect();
        pieces.push(SimplicialPiece {
            generators,
            ray_indices: simplex.clone(),
            strict,
            parallelepiped,
        });
    }
    pieces
}

fn independent_subset(rays: &[Vec<i64>], k: usize) -> Vec<Vec<i64>> {
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    for r in rays {
        if chosen.len() == k {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(r.clone());
        if rank_rows(&trial) == trial.len() {
            chosen = trial;
        }
    }
    assert_eq!(chosen.len(), k);
    chosen
}

fn to_coords(basis: &[Vec<BigInt>], x: &[i64]) -> Option<Vec<BigInt>> {
    let rows: Vec<Vec<Q>> = basis
        .iter()
        .map(|b| b.iter().map(|v| Q::from_integer(v.clone())).collect())
        .collect();
    let sol = solve_in_span(&rows, x)?;
    let mut out = Vec::with_capacity(sol.len());
    for v in sol {
        if !v.is_integer() {
            return None;
        }
        out.push(v.to_integer());
    }
    Some(out)
}

fn transpose_q(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let r = m.len();
    let c = m[0].len();
    (0..c)
        .map(|j| (0..r).map(|i| m[i][j].clone()).collect())
        .collect()
}

/// Sign of n · (ξ + Σ ε^i ray_i) for infinitesimal ε: the first nonzero of
/// (n·ξ, n·ray_1, n·ray_2, …).  Nonzero because the rays span the space.
fn lex_sign(n: &[Q], xi: &[BigInt], rays: &[Vec<BigInt>]) -> i32 {
    let dot_xi: Q = n
        .iter()
        .zip(xi)
        .map(|(a, b)| a * Q::from_integer(b.clone()))
        .sum();
    if !dot_xi.is_zero() {
        return if dot_xi.is_positive() { 1 } else { -1 };
    }
    for r in rays {
        let d: Q = n
            .iter()
            .zip(r)
            .map(|(a, b)| a * Q::from_integer(b.clone()))
            .sum();
        if !d.is_zero() {
            return if d.is_positive() { 1 } else { -1 };
        }
    }
    0
}

/// Placing triangulation of the full-dimensional cone spanned by the
/// given k-dimensional integer coordinate vectors.  Returns simplices as
/// index sets into `coords`.
fn placing_triangulation(coords: &[Vec<BigInt>], k: usize) -> Vec<Vec<usize>> {
    let as_i64: Vec<Vec<i64>> = coords
        .iter()
        .map(|c| c.iter().map(|v| i64::try_from(v).expect("coordinate fits i64")).collect())
        .collect();
    // initial simplex: greedy maximal independent subset in stored order
    let mut initial: Vec<usize> = Vec::new();
    for (i, _) in as_i64.iter().enumerate() {
        if initial.len() == k {
            break;
        }
        let mut trial: Vec<Vec<i64>> = initial.iter().map(|&ix| as_i64[ix].clone()).collect();
        trial.push(as_i64[i].clone());
        if rank_rows(&trial) == trial.len() {
            initial.push(i);
        }
    }
    assert_eq!(initial.len(), k);
    let mut simplices: Vec<Vec<usize>> = vec![initial.clone()];
    let placed: Vec<usize> = (0..coords.len()).filter(|i| !initial.contains(i)).collect();
    for &vi in &placed {
        // boundary facets of the current complex: facets owned by exactly
        // one simplex
        let mut facet_owner: std::collections::BTreeMap<Vec<usize>, Vec<usize>> =
            std::collections::BTreeMap::new();
        for (si, s) in simplices.iter().enumerate() {
            for drop in 0..s.len() {
                let mut f: Vec<usize> = s.clone();
                f.remove(drop);
                f.sort_unstable();
                facet_owner.entry(f).or_default().push(si);
            }
        }
        let mut new_simplices: Vec<Vec<usize>> = Vec::new();
        for (facet, owners) in &facet_owner {
            if owners.len() != 1 {
                continue;
            }
            // functional vanishing on the facet, positive on the owner's
            // off-facet vertex; vi strictly visible iff negative there
            let owner = &simplices[owners[0]];
            let opposite = owner.iter().find(|i| !facet.contains(i)).unwrap();
            let facet_rows: Vec<Vec<Q>> = facet
                .iter()
                .map(|&i| coords[i].iter().map(|v| Q::from_integer(v.clone())).collect())
                .collect();
            let n = facet_functional(&facet_rows, &coords[*opposite], k);
            let val: Q = n
                .iter()
                .zip(&coords[vi])
                .map(|(a, b)| a * Q::from_integer(b.clone()))
                .sum();
            if val.is_negative() {
                let mut s = facet.clone();
                s.push(vi);
                s.sort_unstable();
                new_simplices.push(s);
            }
        }
        // a redundant generator lies inside the current cone and adds
        // nothing; extreme rays always see a boundary facet
        simplices.extend(new_simplices);
    }
    simplices
}

/// A functional vanishing on the k-1 facet rows, scaled to 1 on `positive`.
fn facet_functional(facet_rows: &[Vec<Q>], positive: &[BigInt], k: usize) -> Vec<Q> {
    let mut rows: Vec<Vec<Q>> = facet_rows.to_vec();
    rows.push(positive.iter().map(|v| Q::from_integer(v.clone())).collect());
    let mut rhs = vec![Q::zero(); k];
    rhs[k - 1] = Q::one();
    solve_row_system(&transpose_q(&rows), &rhs).expect("facet rows plus apex are independent")
}

/// Lattice points of the half-open fundamental parallelepiped of the
/// full-rank integer generator matrix `gens` (k×k), in generator-lattice
/// coordinates (ℤ^k ambient = the saturated lattice).
fn parallelepiped_points(gens: &[Vec<BigInt>], strict: &[bool]) -> Vec<Vec<BigInt>> {
    let k = gens.len();
    let (l2, s2, r2) = snf(gens);
    let _ = &l2;
    let r2_inv = invert_unimodular(&r2);
    let diag: Vec<BigInt> = (0..k).map(|i| s2[i][i].clone()).collect();
    assert!(diag.iter().all(|d| !d.is_zero()), "generators must be independent");
    // rational inverse of the generator matrix for coordinate recovery
    let g_rows: Vec<Vec<Q>> = gens
        .iter()
        .map(|g| g.iter().map(|v| Q::from_integer(v.clone())).collect())
        .collect();
    let mut reps = vec![vec![BigInt::zero(); k]];
    for (i, d) in diag.iter().enumerate() {
        let mut next = Vec::new();
        let mut r = BigInt::zero();
        while &r < d {
            for rep in &reps {
                let mut v = rep.clone();
                v[i] = r.clone();
                next.push(v);
            }
            r += 1;
        }
        reps = next;
    }
    let mut out = Vec::with_capacity(reps.len());
    for r in reps {
        // coset representative μ = r · R2^{-1}
        let mu: Vec<BigInt> = (0..k)
            .map(|j| (0..k).map(|i| &r[i] * &r2_inv[i][j]).sum())
            .collect();
        // simplicial coordinates λ = μ · G^{-1}, then shift into the box
        let mu_q: Vec<Q> = mu.iter().map(|v| Q::from_integer(v.clone())).collect();
        let lambda = solve_row_system(&g_rows, &mu_q).expect("generator matrix invertible");
        // point = Σ shifted_j · gens[j]; integral because shifting moves μ
        // by elements of the generator lattice
        let mut exact = vec![Q::zero(); k];
        for (j, l) in lambda.iter().enumerate() {
            let shifted = shift_to_box(l, strict[j]);
            for c in 0..k {
                exact[c] += &shifted * Q::from_integer(gens[j][c].clone());
            }
        }
        let pt: Vec<BigInt> = exact
            .into_iter()
            .map(|v| {
                assert!(v.is_integer(), "parallelepiped points are lattice points");
                v.to_integer()
            })
            .collect();
        out.push(pt);
    }
    out
}

/// Shift a rational into [0,1) (closed side) or (0,1] (strict side) by an
/// integer translation.
fn shift_to_box(l: &Q, strict: bool) -> Q {
    let floor = l.floor();
    let mut frac = l - &floor;
    if strict && frac.is_zero() {
        frac = Q::one();
    }
    frac
}

/// Index of the piece (if any) containing the lattice point; used by the
/// disjointness checks.
pub fn locate(pieces: &[SimplicialPiece], x: &[i64]) -> Vec<usize> {
    pieces
        .iter()
        .enumerate()
        .filter(|(_, p)| p.contains(x))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_single_unimodular_piece() {
        let rays = vec![vec![1, 0], vec![0, 1]];
        let pieces = decompose(&rays);
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].parallelepiped, vec![vec![0, 0]]);
        assert_eq!(pieces[0].strict, vec![false, false]);
    }

    #[test]
    fn one_dim_ray() {
        let rays = vec![vec![1, 1]];
        let pieces = decompose(&rays);
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].parallelepiped, vec![vec![0, 0]]);
        let pts = pieces[0].points_in_box(4);
        let mut expect: Vec<Vec<i64>> = (0..=4).map(|i| vec![i, i]).collect();
        let mut got = pts.clone();
        got.sort();
        expect.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn origin_cone() {
        let pieces = decompose(&[]);
        assert_eq!(pieces.len(), 1);
        assert!(pieces[0].generators.is_empty());
    }

    #[test]
    fn index_two_parallelepiped() {
        // cone spanned by (1,0) and (1,2): index 2, one interior pp point
        let rays = vec![vec![1, 0], vec![1, 2]];
        let pieces = decompose(&rays);
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].parallelepiped.len(), 2);
        assert!(pieces[0].parallelepiped.contains(&vec![0, 0]));
        assert!(pieces[0].parallelepiped.contains(&vec![1, 1]));
    }

    #[test]
    fn square_cone_partition() {
        // cone over the unit square at height 1: four extreme rays,
        // triangulated into two simplices sharing a diagonal; every cone
        // lattice point must land in exactly one half-open piece
        let rays = vec![vec![0, 0, 1], vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 1]];
        let pieces = decompose(&rays);
        assert_eq!(pieces.len(), 2);
        let inside = |p: &[i64]| p[2] >= p[0] && p[2] >= p[1] && p[0] >= 0 && p[1] >= 0;
        let mut expect: Vec<Vec<i64>> = Vec::new();
        for x in 0..=4i64 {
            for y in 0..=4i64 {
                for z in 0..=4i64 {
                    let pt = vec![x, y, z];
                    let hits = locate(&pieces, &pt);
                    assert_eq!(
                        hits.len(),
                        usize::from(inside(&pt)),
                        "point {:?} in {} pieces",
                        pt,
                        hits.len()
                    );
                    if inside(&pt) {
                        expect.push(pt);
                    }
                }
            }
        }
        // the piece box-enumerations together give the same point set
        let mut all: Vec<Vec<i64>> = Vec::new();
        for p in &pieces {
            all.extend(p.points_in_box(4));
        }
        all.sort();
        expect.sort();
        assert_eq!(all, expect);
    }

    #[test]
    fn redundant_generator_is_skipped() {
        // (1,1) lies inside the quadrant; the decomposition must ignore it
        let rays = vec![vec![1, 0], vec![0, 1], vec![1, 1]];
        let pieces = decompose(&rays);
        for x in 0..=3i64 {
            for y in 0..=3i64 {
                assert_eq!(locate(&pieces, &[x, y]).len(), 1);
            }
        }
    }

    #[test]
    fn lower_dimensional_cone_in_3d() {
        // rays span a 2-plane inside R^3
        let rays = vec![vec![1, 0, 1], vec![0, 1, 1]];
        let pieces = decompose(&rays);
        assert_eq!(pieces.len(), 1);
        let pts = pieces[0].points_in_box(3);
        for p in &pts {
            assert_eq!(p[0] + p[1], p[2]);
        }
        // count: all (a,b) with a,b >= 0, a+b <= 3
        assert_eq!(pts.len(), 10);
    }
}
