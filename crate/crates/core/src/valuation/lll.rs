//! LLL reduction (δ = 0.99) for integer lattices under a diagonal integer
//! quadratic form.  A floating-point Gram–Schmidt pass does the bulk of the
//! work; its output is verified in exact rational arithmetic and, if the
//! check fails, finished by the integral (fraction-free) algorithm.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub const DELTA_NUM: i64 = 99;
pub const DELTA_DEN: i64 = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LllOutput {
    /// Reduced basis, one vector per row.
    pub basis: Vec<Vec<BigInt>>,
    /// Unimodular matrix with `basis = transform · input`.
    pub transform: Vec<Vec<BigInt>>,
    /// Whether the exact integral algorithm had to take over.
    pub exact_fallback: bool,
}

/// LLL-reduces the rows of `basis` under the standard inner product.
pub fn lll_reduce(basis: &[Vec<BigInt>]) -> Result<Vec<Vec<BigInt>>> {
    let dim = basis.first().map_or(0, |r| r.len());
    let w = vec![BigInt::one(); dim];
    Ok(lll_reduce_weighted(basis, &w)?.basis)
}

/// LLL-reduces the rows of `basis` under `⟨x, y⟩ = Σ w_i x_i y_i`.
pub fn lll_reduce_weighted(basis: &[Vec<BigInt>], weights: &[BigInt]) -> Result<LllOutput> {
    let n = basis.len();
    if n == 0 {
        return Ok(LllOutput {
            basis: vec![],
            transform: vec![],
            exact_fallback: false,
        });
    }
    let dim = basis[0].len();
    if basis.iter().any(|r| r.len() != dim) || weights.len() != dim {
        return Err(Error::DimensionMismatch(dim, weights.len()));
    }
    if rank(basis) < n {
        return Err(Error::RankDeficient);
    }
    let mut b = basis.to_vec();
    let mut u = identity(n);
    let delta = DELTA_NUM as f64 / DELTA_DEN as f64;
    let ok = float_lll(&mut b, &mut u, weights, delta);
    let mut exact_fallback = false;
    if !ok || !is_reduced(&b, weights) {
        exact_fallback = true;
        integral_lll(&mut b, &mut u, weights);
    }
    debug_assert!(determinant(&u).abs().is_one());
    Ok(LllOutput {
        basis: b,
        transform: u,
        exact_fallback,
    })
}

fn identity(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect())
        .collect()
}

fn dot(a: &[BigInt], b: &[BigInt], w: &[BigInt]) -> BigInt {
    let mut acc = BigInt::zero();
    for ((x, y), c) in a.iter().zip(b).zip(w) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y * c;
        }
    }
    acc
}

fn big_f64(x: &BigInt) -> f64 {
    x.to_f64()
        .unwrap_or(if x.is_negative() { f64::MIN } else { f64::MAX })
}

fn sub_scaled(target: &mut [BigInt], src: &[BigInt], q: &BigInt) {
    for (t, s) in target.iter_mut().zip(src) {
        if !s.is_zero() {
            *t -= q * s;
        }
    }
}

/// Rank of an integer matrix by fraction-free elimination.
pub fn rank(rows: &[Vec<BigInt>]) -> usize {
    let mut a = rows.to_vec();
    let n = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if r == n {
            break;
        }
        let Some(piv) = (r..n).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, piv);
        for i in r + 1..n {
            for j in c + 1..cols {
                let v = (&a[r][c] * &a[i][j] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

/// Determinant of a square integer matrix (Bareiss).
pub fn determinant(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    let mut a = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let Some(piv) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, piv);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[k][k] * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    if n == 0 {
        return BigInt::one();
    }
    sign * &a[n - 1][n - 1]
}

pub fn gram(b: &[Vec<BigInt>], w: &[BigInt]) -> Vec<Vec<BigInt>> {
    let n = b.len();
    let mut g = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = dot(&b[i], &b[j], w);
            g[j][i] = v.clone();
            g[i][j] = v;
        }
    }
    g
}

fn float_lll(b: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], w: &[BigInt], delta: f64) -> bool {
    let n = b.len();
    let mut g = gram(b, w);
    let mut mu = vec![vec![0.0f64; n]; n];
    let mut bb = vec![0.0f64; n];
    let gs_row = |i: usize, g: &Vec<Vec<BigInt>>, mu: &mut Vec<Vec<f64>>, bb: &mut Vec<f64>| {
        for j in 0..i {
            let mut s = big_f64(&g[i][j]);
            for l in 0..j {
                s -= mu[j][l] * mu[i][l] * bb[l];
            }
            mu[i][j] = s / bb[j];
        }
        let mut s = big_f64(&g[i][i]);
        for j in 0..i {
            s -= mu[i][j] * mu[i][j] * bb[j];
        }
        bb[i] = s;
    };
    gs_row(0, &g, &mut mu, &mut bb);
    let mut valid = 0usize;
    let mut k = 1usize;
    let max_steps = 200_000 + 50 * n * n * n;
    let mut steps = 0usize;
    while k < n {
        steps += 1;
        if steps > max_steps {
            return false;
        }
        for i in valid + 1..=k {
            gs_row(i, &g, &mut mu, &mut bb);
        }
        valid = k;
        // size reduction, repeated while it still moves the vector
        let mut passes = 0;
        loop {
            passes += 1;
            if passes > 64 {
                return false;
            }
            let mut changed = false;
            for j in (0..k).rev() {
                if mu[k][j].abs() > 0.5 {
                    let q = mu[k][j].round();
                    let Some(qb) = BigInt::from_f64(q) else {
                        return false;
                    };
                    let (bj, uj) = (b[j].clone(), u[j].clone());
                    sub_scaled(&mut b[k], &bj, &qb);
                    sub_scaled(&mut u[k], &uj, &qb);
                    for i in 0..j {
                        mu[k][i] -= q * mu[j][i];
                    }
                    mu[k][j] -= q;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            for i in 0..n {
                let v = dot(&b[k], &b[i], w);
                g[i][k] = v.clone();
                g[k][i] = v;
            }
            gs_row(k, &g, &mut mu, &mut bb);
        }
        if !(bb[k].is_finite() && bb[k] > 0.0) {
            return false;
        }
        if bb[k] < (delta - mu[k][k - 1] * mu[k][k - 1]) * bb[k - 1] {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            g.swap(k, k - 1);
            for row in g.iter_mut() {
                row.swap(k, k - 1);
            }
            valid = k.saturating_sub(2);
            if k == 1 {
                gs_row(0, &g, &mut mu, &mut bb);
            }
            k = (k - 1).max(1);
        } else {
            k += 1;
        }
    }
    true
}

/// Exact check of the size condition (with η slightly above 1/2) and the
/// Lovász condition (with δ slightly below 0.99).
pub fn is_reduced(b: &[Vec<BigInt>], w: &[BigInt]) -> bool {
    let n = b.len();
    let g = gram(b, w);
    let q = |x: &BigInt| BigRational::from_integer(x.clone());
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    let mut bb = vec![BigRational::zero(); n];
    let eta = BigRational::new(BigInt::from(500_001), BigInt::from(1_000_000));
    let delta = BigRational::new(BigInt::from(989_999), BigInt::from(1_000_000));
    for i in 0..n {
        for j in 0..i {
            let mut s = q(&g[i][j]);
            for l in 0..j {
                s -= &mu[j][l] * &mu[i][l] * &bb[l];
            }
            mu[i][j] = s / &bb[j];
            if mu[i][j].abs() > eta {
                return false;
            }
        }
        let mut s = q(&g[i][i]);
        for j in 0..i {
            s -= &mu[i][j] * &mu[i][j] * &bb[j];
        }
        if !s.is_positive() {
            return false;
        }
        bb[i] = s;
        if i > 0 && bb[i] < (&delta - &mu[i][i - 1] * &mu[i][i - 1]) * &bb[i - 1] {
            return false;
        }
    }
    true
}

/// Fraction-free LLL on the Gram data `d_i` and `λ_ij`, all integers.
fn integral_lll(b: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], w: &[BigInt]) {
    let n = b.len();
    let dn = BigInt::from(DELTA_NUM);
    let dd = BigInt::from(DELTA_DEN);
    // d[i + 1] is the Gram determinant of the first i + 1 vectors; d[0] = 1
    let mut d = vec![BigInt::one(); n + 1];
    let mut lam = vec![vec![BigInt::zero(); n]; n];
    let mut kmax = 0usize;
    d[1] = dot(&b[0], &b[0], w);
    let mut k = 1usize;

    fn redi(
        k: usize,
        l: usize,
        b: &mut [Vec<BigInt>],
        u: &mut [Vec<BigInt>],
        d: &[BigInt],
        lam: &mut [Vec<BigInt>],
    ) {
        let two = BigInt::from(2);
        if (&two * &lam[k][l]).abs() > d[l + 1] {
            let q = round_div(&lam[k][l], &d[l + 1]);
            let (bl, ul) = (b[l].clone(), u[l].clone());
            sub_scaled(&mut b[k], &bl, &q);
            sub_scaled(&mut u[k], &ul, &q);
            lam[k][l] -= &q * &d[l + 1];
            for i in 0..l {
                let t = &q * &lam[l][i];
                lam[k][i] -= t;
            }
        }
    }

    while k < n {
        if k > kmax {
            kmax = k;
            for j in 0..=k {
                let mut uu = dot(&b[k], &b[j], w);
                for i in 0..j {
                    uu = (&d[i + 1] * &uu - &lam[k][i] * &lam[j][i]) / &d[i];
                }
                if j < k {
                    lam[k][j] = uu;
                } else {
                    d[k + 1] = uu;
                }
            }
        }
        loop {
            redi(k, k - 1, b, u, &d, &mut lam);
            let lhs = &dd * &d[k + 1] * &d[k - 1];
            let rhs = &dn * &d[k] * &d[k] - &dd * &lam[k][k - 1] * &lam[k][k - 1];
            if lhs < rhs {
                // swap k and k-1
                b.swap(k, k - 1);
                u.swap(k, k - 1);
                for j in 0..k - 1 {
                    let t = lam[k][j].clone();
                    lam[k][j] = lam[k - 1][j].clone();
                    lam[k - 1][j] = t;
                }
                let l = lam[k][k - 1].clone();
                let bnew = (&d[k - 1] * &d[k + 1] + &l * &l) / &d[k];
                for i in k + 1..=kmax {
                    let t = lam[i][k].clone();
                    lam[i][k] = (&d[k + 1] * &lam[i][k - 1] - &l * &t) / &d[k];
                    lam[i][k - 1] = (&bnew * &t + &l * &lam[i][k]) / &d[k + 1];
                }
                d[k] = bnew;
                if k > 1 {
                    k -= 1;
                }
            } else {
                for l in (0..k - 1).rev() {
                    redi(k, l, b, u, &d, &mut lam);
                }
                k += 1;
                break;
            }
        }
    }
}

/// Nearest integer to `a / b` for `b > 0`, ties rounded up.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    (a * &two + b).div_floor(&(b * &two))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    #[test]
    fn unimodular_z2() {
        let out = lll_reduce(&m(&[&[1, 0], &[7, 1]])).unwrap();
        assert!(out.iter().flatten().all(|x| x.abs() <= BigInt::one()));
        assert!(determinant(&out).abs().is_one());
    }

    #[test]
    fn identity_and_scaled() {
        let id = m(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        let out = lll_reduce(&id).unwrap();
        assert_eq!(out, id);
        let two = lll_reduce(&m(&[&[2, 0], &[0, 2]])).unwrap();
        assert_eq!(determinant(&two).abs(), BigInt::from(4));
    }

    #[test]
    fn rank_deficient() {
        assert_eq!(
            lll_reduce(&m(&[&[1, 2], &[2, 4]])),
            Err(Error::RankDeficient)
        );
    }

    #[test]
    fn integral_path_agrees() {
        let b = m(&[&[1, 1, 1], &[-1, 0, 2], &[3, 5, 6]]);
        let w = vec![BigInt::one(); 3];
        let mut bi = b.clone();
        let mut u = identity(3);
        integral_lll(&mut bi, &mut u, &w);
        assert!(is_reduced(&bi, &w));
        assert!(determinant(&u).abs().is_one());
        assert_eq!(determinant(&gram(&bi, &w)), determinant(&gram(&b, &w)));
    }

    #[test]
    fn round_div_ties() {
        assert_eq!(
            round_div(&BigInt::from(5), &BigInt::from(2)),
            BigInt::from(3)
        );
        assert_eq!(
            round_div(&BigInt::from(-5), &BigInt::from(2)),
            BigInt::from(-2)
        );
        assert_eq!(
            round_div(&BigInt::from(7), &BigInt::from(3)),
            BigInt::from(2)
        );
    }
}
