//! Small exact linear algebra helpers: rank, rational solving, Smith
//! normal form with transform tracking, and saturated lattice bases.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn rank_rows(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<Q>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| Q::from_integer(BigInt::from(x))).collect())
        .collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let pivot = (rank..m.len()).find(|&r| !m[r][c].is_zero());
        let Some(pr) = pivot else { continue };
        m.swap(rank, pr);
        let inv = m[rank][c].recip();
        for x in m[rank].clone().iter().enumerate() {
            m[rank][x.0] = x.1 * &inv;
        }
        for r in 0..m.len() {
            if r != rank && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for cc in 0..cols {
                    let sub = &m[rank][cc] * &f;
                    m[r][cc] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Solve x · A = b for a square nonsingular rational matrix A (rows of A
/// given); returns None when singular.
pub fn solve_row_system(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    // transpose to the column convention: A^T x^T = b^T
    let n = a.len();
    debug_assert!(a.iter().all(|r| r.len() == n));
    let mut m: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            let mut row: Vec<Q> = (0..n).map(|j| a[j][i].clone()).collect();
            row.push(b[i].clone());
            row
        })
        .collect();
    for c in 0..n {
        let pivot = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, pivot);
        let inv = m[c][c].recip();
        for x in 0..=n {
            m[c][x] = &m[c][x] * &inv;
        }
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for x in 0..=n {
                    let sub = &m[c][x] * &f;
                    m[r][x] -= sub;
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n].clone()).collect())
}

/// Inverse of a square integer matrix with determinant ±1.
pub fn invert_unimodular(a: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let rows: Vec<Vec<Q>> = a
        .iter()
        .map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect())
        .collect();
    let mut inv: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); n]; n];
    // solve e_i · A^{-1}: columns of the inverse from unit right-hand sides
    for i in 0..n {
        let mut b = vec![Q::zero(); n];
        b[i] = Q::one();
        let x = solve_row_system(&rows, &b).expect("unimodular matrix is invertible");
        for (j, v) in x.into_iter().enumerate() {
            assert!(v.is_integer(), "inverse of unimodular matrix must be integral");
            inv[i][j] = v.to_integer();
        }
    }
    // inv now satisfies inv · A = I row-by-row
    inv
}

/// Smith-style diagonalization: returns (l, s, r) with s = l · a · r,
/// l and r unimodular, s diagonal with nonnegative entries.  (No
/// divisibility chain; not needed here.)
pub fn snf(a: &[Vec<BigInt>]) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut s: Vec<Vec<BigInt>> = a.to_vec();
    let mut l: Vec<Vec<BigInt>> = identity(m);
    let mut r: Vec<Vec<BigInt>> = identity(n);
    let rank_bound = m.min(n);
    for k in 0..rank_bound {
        loop {
            // find a nonzero pivot in the lower-right block
            let mut pivot: Option<(usize, usize)> = None;
            let mut best: Option<BigInt> = None;
            for i in k..m {
                for j in k..n {
                    if !s[i][j].is_zero() {
                        let mag = s[i][j].abs();
                        if best.as_ref().map_or(true, |b| &mag < b) {
                            best = Some(mag);
                            pivot = Some((i, j));
                        }
                    }
                }
            }
            let Some((pi, pj)) = pivot else { break };
            s.swap(k, pi);
            l.swap(k, pi);
            swap_cols(&mut s, k, pj);
            swap_cols(&mut r, k, pj);
            if s[k][k].is_negative() {
                negate_row(&mut s, k);
                negate_row(&mut l, k);
            }
            let mut progress = false;
            for i in (k + 1)..m {
                if !s[i][k].is_zero() {
                    let q = div_round(&s[i][k], &s[k][k]);
                    row_sub(&mut s, i, k, &q);
                    row_sub(&mut l, i, k, &q);
                    progress = true;
                }
            }
            for j in (k + 1)..n {
                if !s[k][j].is_zero() {
                    let q = div_round(&s[k][j], &s[k][k]);
                    col_sub(&mut s, j, k, &q);
                    col_sub(&mut r, j, k, &q);
                    progress = true;
                }
            }
            let cleared = ((k + 1)..m).all(|i| s[i][k].is_zero())
                && ((k + 1)..n).all(|j| s[k][j].is_zero());
            if cleared {
                break;
            }
            if !progress {
                break;
            }
        }
    }
    (l, s, r)
}

fn identity(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

fn swap_cols(m: &mut [Vec<BigInt>], a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

fn negate_row(m: &mut [Vec<BigInt>], i: usize) {
    for x in m[i].iter_mut() {
        *x = -x.clone();
    }
}

fn row_sub(m: &mut [Vec<BigInt>], i: usize, k: usize, q: &BigInt) {
    let row_k = m[k].clone();
    for (x, y) in m[i].iter_mut().zip(row_k) {
        *x -= q * y;
    }
}

fn col_sub(m: &mut [Vec<BigInt>], j: usize, k: usize, q: &BigInt) {
    for row in m.iter_mut() {
        let sub = q * &row[k];
        row[j] -= sub;
    }
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    // quotient minimizing |a - q b|
    let (q, r) = num_integer::Integer::div_rem(a, b);
    if r.abs() * 2 > b.abs() {
        if (r.sign() == b.sign()) || r.is_zero() {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// For independent integer rows V (k×t): a basis B (k×t) of the saturated
/// lattice ℤ^t ∩ span_ℚ(V), and the integer coordinate matrix C (k×k) with
/// V = C · B.
pub fn saturate(v: &[Vec<i64>]) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let k = v.len();
    let a: Vec<Vec<BigInt>> = v
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let (l, s, r) = snf(&a);
    // A = L^{-1} S R^{-1}; with P = R^{-1}, B = first k rows of P and
    // C = L^{-1} · diag(s_1..s_k)
    let l_inv = invert_unimodular(&l);
    let r_inv = invert_unimodular(&r);
    for (i, row) in s.iter().enumerate().take(k) {
        assert!(!row[i].is_zero(), "saturate() needs independent rows");
    }
    let b: Vec<Vec<BigInt>> = r_inv.iter().take(k).cloned().collect();
    let c: Vec<Vec<BigInt>> = (0..k)
        .map(|i| (0..k).map(|j| &l_inv[i][j] * &s[j][j]).collect())
        .collect();
    (b, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bim(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    #[test]
    fn rank_basic() {
        assert_eq!(rank_rows(&[vec![1, 0], vec![0, 1]]), 2);
        assert_eq!(rank_rows(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(rank_rows(&[vec![0, 0]]), 0);
    }

    #[test]
    fn snf_reconstructs() {
        let a = bim(&[&[2, 4, 4], &[-6, 6, 12], &[10, 4, 16]]);
        let (l, s, r) = snf(&a);
        // check s = l a r
        let la = mat_mul(&l, &a);
        let lar = mat_mul(&la, &r);
        assert_eq!(lar, s);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(s[i][j].is_zero());
                }
            }
        }
        // unimodularity via exact inverse
        let _ = invert_unimodular(&l);
        let _ = invert_unimodular(&r);
    }

    fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
        let n = a.len();
        let m = b[0].len();
        let inner = b.len();
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| (0..inner).map(|k| &a[i][k] * &b[k][j]).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn saturate_scaled_row() {
        // span of (2, 4) saturates to basis (1, 2) with coordinate 2
        let (b, c) = saturate(&[vec![2, 4]]);
        let back: Vec<BigInt> = (0..2).map(|j| &c[0][0] * &b[0][j]).collect();
        assert_eq!(back, vec![BigInt::from(2), BigInt::from(4)]);
        let g = num_integer::Integer::gcd(&b[0][0], &b[0][1]);
        assert_eq!(g, BigInt::one());
    }

    #[test]
    fn saturate_full_rank() {
        let v = vec![vec![1, 0, 1], vec![0, 2, 0]];
        let (b, c) = saturate(&v);
        // V = C B exactly
        for i in 0..2 {
            for j in 0..3 {
                let got: BigInt = (0..2).map(|k| &c[i][k] * &b[k][j]).sum();
                assert_eq!(got, BigInt::from(v[i][j]));
            }
        }
    }
}
