//! Flags over a prime `p`, the valuation map `ν = (ν₁, ν°)` on integer
//! sections, and valuation images of effective sets (exact, or via lattice
//! reduction and bounded search).
//!
//! `ν₁` is the p-adic content order of the coefficient vector.  The residual
//! part `ν°` is read off the reduction `s̄ = (s / p^{ν₁}) mod p` after a linear
//! change of coordinates over `F_p` that puts the flag in standard position:
//!
//! * `P1`, point `α`: coordinates `(u, w)` with `u = X1 − αX0` (or `u = X0`
//!   at infinity); `ν°` is the `u`-adic order.
//! * `P2`, line `ℓ` and point `P ∈ ℓ`: coordinates `(u, v, w)` with `u = ℓ`,
//!   `v` vanishing at `P`; `ν° = (a, b)` is the lexicographically smallest
//!   `(u, v)`-exponent pair in the support.

pub mod lll;
pub mod search;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{ArithmeticModel, HermitianLineBundle, ModelKind};
use crate::norms::{min_nonzero_norm_logbound, Coeffs, Membership, NormKernel};
use crate::numeric::{is_prime, ratio_to_f64};
use crate::sections::{enumerate_effective, EffectiveSectionSet, MEMBERSHIP_CELLS};
use crate::{Error, Result};

pub use lll::{lll_reduce, lll_reduce_weighted, LllOutput};
pub use search::{short_vector_search, SearchOutcome, SublatticeProblem};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum FlagPoint {
    /// The point `t = alpha` of `P1_{F_p}`.
    Affine { alpha: u64 },
    /// The point at infinity of `P1_{F_p}`.
    Infinity,
    /// A line `ℓ·X = 0` of `P2_{F_p}` and a point on it, in homogeneous
    /// coordinates `(X0, X1, X2)` with `t1 = X1/X0`, `t2 = X2/X0`.
    Plane { line: [u64; 3], point: [u64; 3] },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    kind: ModelKind,
    p: u64,
    point: FlagPoint,
}

pub fn make_flag(model: ArithmeticModel, p: u64, point: FlagPoint) -> Result<Flag> {
    Flag::new(model.kind(), p, point)
}

impl Flag {
    pub fn new(kind: ModelKind, p: u64, point: FlagPoint) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        match (&point, kind) {
            (FlagPoint::Affine { alpha }, ModelKind::P1Z) => {
                if *alpha >= p {
                    return Err(Error::NotRational(format!(
                        "{alpha} is not reduced mod {p}"
                    )));
                }
            }
            (FlagPoint::Infinity, ModelKind::P1Z) => {}
            (FlagPoint::Plane { line, point }, ModelKind::P2Z) => {
                if line.iter().chain(point).any(|&c| c >= p) {
                    return Err(Error::NotRational(format!(
                        "coordinates of {line:?}, {point:?} are not reduced mod {p}"
                    )));
                }
                if line.iter().all(|&c| c == 0) || point.iter().all(|&c| c == 0) {
                    return Err(Error::InvalidFlag("zero line or point".into()));
                }
                let on: u64 = (0..3).map(|i| line[i] * point[i] % p).sum::<u64>() % p;
                if on != 0 {
                    return Err(Error::InvalidFlag("point does not lie on the line".into()));
                }
            }
            _ => {
                return Err(Error::InvalidFlag(format!(
                    "point data {point:?} does not match {kind}"
                )))
            }
        }
        Ok(Flag { kind, p, point })
    }

    /// `P1` flag at `t = α`, or at infinity when `alpha` is `None`.
    pub fn p1(p: u64, alpha: Option<u64>) -> Result<Self> {
        let point = match alpha {
            Some(alpha) => FlagPoint::Affine { alpha },
            None => FlagPoint::Infinity,
        };
        Flag::new(ModelKind::P1Z, p, point)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn point(&self) -> &FlagPoint {
        &self.point
    }

    /// Dimension `d` of the valuation vectors.
    pub fn dimension(&self) -> usize {
        ArithmeticModel::new(self.kind).dimension()
    }

    /// New coordinates as linear forms in the old ones (rows).
    fn forms(&self) -> Vec<Vec<u64>> {
        let p = self.p;
        match &self.point {
            FlagPoint::Affine { alpha } => vec![vec![(p - alpha) % p, 1], vec![1, 0]],
            FlagPoint::Infinity => vec![vec![1, 0], vec![0, 1]],
            FlagPoint::Plane { line, point } => {
                let l = line.to_vec();
                // forms vanishing at the point: a basis of its orthogonal
                let basis = kernel_of_point(point, p);
                let v = basis
                    .into_iter()
                    .find(|f| !proportional(f, &l, p))
                    .expect("the orthogonal of a point is two-dimensional");
                let i = (0..3).find(|&i| point[i] != 0).expect("nonzero point");
                let mut w = vec![0u64; 3];
                w[i] = 1;
                vec![l, v, w]
            }
        }
    }

    /// Change-of-coordinates data for sections of degree `degree`.
    pub fn coords(&self, degree: usize) -> FlagCoords {
        FlagCoords::new(self, degree)
    }
}

fn kernel_of_point(pt: &[u64; 3], p: u64) -> Vec<Vec<u64>> {
    let i = (0..3).find(|&i| pt[i] != 0).expect("nonzero point");
    let inv = mod_inv(pt[i], p);
    let mut out = Vec::new();
    for j in 0..3 {
        if j == i {
            continue;
        }
        // e_j − (pt_j / pt_i) e_i
        let mut f = vec![0u64; 3];
        f[j] = 1;
        f[i] = (p - pt[j] * inv % p) % p;
        out.push(f);
    }
    out
}

fn proportional(a: &[u64], b: &[u64], p: u64) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] * b[j] + p * p - a[j] * b[i] % p) % p == 0))
}

pub(crate) fn mod_pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % p as u128) as u64;
        }
        b = (b as u128 * b as u128 % p as u128) as u64;
        e >>= 1;
    }
    acc
}

pub(crate) fn mod_inv(a: u64, p: u64) -> u64 {
    mod_pow(a, p - 2, p)
}

fn invert_mod(m: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let n = m.len();
    let mut a: Vec<Vec<u64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| (i == j) as u64));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&i| a[i][c] % p != 0).expect("invertible");
        a.swap(c, piv);
        let inv = mod_inv(a[c][c], p);
        for x in a[c].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..n {
            if i != c && a[i][c] != 0 {
                let f = a[i][c];
                for j in 0..2 * n {
                    a[i][j] = (a[i][j] + p * p - f * a[c][j] % p) % p;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Homogeneous exponent vectors of degree `d` in `nv` variables, ordered
/// lexicographically by the leading `nv − 1` exponents.
fn homogeneous_monomials(nv: usize, d: usize) -> Vec<Vec<usize>> {
    match nv {
        2 => (0..=d).map(|a| vec![a, d - a]).collect(),
        3 => {
            let mut out = Vec::new();
            for a in 0..=d {
                for b in 0..=(d - a) {
                    out.push(vec![a, b, d - a - b]);
                }
            }
            out
        }
        _ => unreachable!("two or three homogeneous variables"),
    }
}

/// Expands `Π_k L_k^{e_k}` where `L_k` is the linear form `subst[k]` in the
/// target variables; returns coefficients over `targets` (same degree).
fn expand(subst: &[Vec<u64>], exps: &[usize], targets: &[Vec<usize>], p: u64) -> Vec<u64> {
    let nv = subst[0].len();
    let d: usize = exps.iter().sum();
    let side = d + 1;
    let flat = |e: &[usize]| -> usize { e[..nv - 1].iter().fold(0usize, |acc, &x| acc * side + x) };
    let size = side.pow(nv as u32 - 1);
    let mut poly = vec![0u64; size];
    poly[0] = 1;
    let mut deg = 0usize;
    for (k, &e) in exps.iter().enumerate() {
        for _ in 0..e {
            let mut next = vec![0u64; size];
            for (idx, &c) in poly.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                // decode leading exponents of idx
                let mut lead = vec![0usize; nv - 1];
                let mut r = idx;
                for t in (0..nv - 1).rev() {
                    lead[t] = r % side;
                    r /= side;
                }
                for (v, &coef) in subst[k].iter().enumerate() {
                    if coef == 0 {
                        continue;
                    }
                    let mut e2 = lead.clone();
                    if v < nv - 1 {
                        e2[v] += 1;
                    }
                    let j = e2.iter().fold(0usize, |acc, &x| acc * side + x);
                    next[j] = (next[j] + c * coef) % p;
                }
            }
            poly = next;
            deg += 1;
        }
    }
    debug_assert_eq!(deg, d);
    targets.iter().map(|t| poly[flat(t)]).collect()
}

/// Linear algebra over `F_p` putting a flag in standard position for
/// sections of a fixed degree.
#[derive(Debug, Clone)]
pub struct FlagCoords {
    p: u64,
    degree: usize,
    /// residual valuation of each target monomial, in increasing order
    keys: Vec<Vec<i64>>,
    /// `forward[k][i]`: coefficient of target monomial `k` in source monomial `i`
    forward: Vec<Vec<u64>>,
    /// `inverse[k]`: source coefficients of target monomial `k`
    inverse: Vec<Vec<u64>>,
}

impl FlagCoords {
    fn new(flag: &Flag, degree: usize) -> Self {
        let p = flag.p;
        let forms = flag.forms();
        let inv_forms = invert_mod(&forms, p);
        let nv = forms.len();
        let model = ArithmeticModel::new(flag.kind);
        // source monomials as homogeneous exponents in (X0, X1[, X2])
        let source: Vec<Vec<usize>> = model
            .monomials(degree)
            .into_iter()
            .map(|e| {
                let rest: usize = e.iter().sum();
                let mut h = vec![degree - rest];
                h.extend(e);
                h
            })
            .collect();
        let targets = homogeneous_monomials(nv, degree);
        // old var X_k = Σ_v inv_forms[k][v] · new_v
        let forward_cols: Vec<Vec<u64>> = source
            .iter()
            .map(|e| expand(&inv_forms, e, &targets, p))
            .collect();
        let n = targets.len();
        let forward: Vec<Vec<u64>> = (0..n)
            .map(|k| forward_cols.iter().map(|col| col[k]).collect())
            .collect();
        // new var y_v = Σ_k forms[v][k] · X_k, expanded in source monomials
        let inverse: Vec<Vec<u64>> = targets
            .iter()
            .map(|e| expand(&forms, e, &source, p))
            .collect();
        let keys = targets
            .iter()
            .map(|t| t[..nv - 1].iter().map(|&x| x as i64).collect())
            .collect();
        FlagCoords {
            p,
            degree,
            keys,
            forward,
            inverse,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn keys(&self) -> &[Vec<i64>] {
        &self.keys
    }

    /// Residual valuation of a reduced section (entries in `[0, p)`);
    /// `None` for the zero vector.
    pub fn residual(&self, sbar: &[u64]) -> Option<&[i64]> {
        let p = self.p;
        for (k, row) in self.forward.iter().enumerate() {
            let mut acc: u64 = 0;
            for (a, b) in row.iter().zip(sbar) {
                if *a != 0 && *b != 0 {
                    acc = (acc + a * b) % p;
                }
            }
            if acc != 0 {
                return Some(&self.keys[k]);
            }
        }
        None
    }

    /// Centered integer lift of the section whose reduction is exactly the
    /// target monomial with residual valuation `key`.
    pub fn witness(&self, key: &[i64]) -> Option<Vec<BigInt>> {
        let k = self.keys.iter().position(|x| x.as_slice() == key)?;
        Some(
            self.inverse[k]
                .iter()
                .map(|&c| BigInt::from(centered(c, self.p)))
                .collect(),
        )
    }

    /// Integer basis (rows) of `{s : s mod p has residual valuation >= key}`.
    pub fn filtration_basis(&self, key: &[i64]) -> Vec<Vec<BigInt>> {
        let p = self.p;
        let n = self.forward.len();
        let gens: Vec<Vec<u64>> = self
            .keys
            .iter()
            .zip(&self.inverse)
            .filter(|(k, _)| k.as_slice() >= key)
            .map(|(_, col)| col.clone())
            .collect();
        let (rows, pivots) = rref(gens, p);
        let mut basis: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|r| r.iter().map(|&c| BigInt::from(centered(c, p))).collect())
            .collect();
        for j in 0..n {
            if !pivots.contains(&j) {
                let mut e = vec![BigInt::zero(); n];
                e[j] = BigInt::from(p);
                basis.push(e);
            }
        }
        basis
    }
}

fn centered(c: u64, p: u64) -> i64 {
    if c > p / 2 {
        c as i64 - p as i64
    } else {
        c as i64
    }
}

/// Reduced row echelon form over `F_p`; returns nonzero rows and pivots.
fn rref(mut rows: Vec<Vec<u64>>, p: u64) -> (Vec<Vec<u64>>, Vec<usize>) {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows.len()).find(|&i| rows[i][c] % p != 0) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = mod_inv(rows[r][c], p);
        for x in rows[r].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let f = rows[i][c];
                for j in 0..cols {
                    rows[i][j] = (rows[i][j] + p * p - f * rows[r][j] % p) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

/// Valuation of a nonzero integer section, given precomputed coordinates.
pub fn nu_with(coords: &FlagCoords, coeffs: &[BigInt]) -> Result<Vec<i64>> {
    let p = BigInt::from(coords.p);
    let mut x: Option<u32> = None;
    for a in coeffs.iter().filter(|a| !a.is_zero()) {
        let mut v = 0u32;
        let mut t = a.clone();
        loop {
            let (q, r) = t.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            t = q;
            v += 1;
            if x.is_some_and(|x| v >= x) {
                break;
            }
        }
        x = Some(x.map_or(v, |x| x.min(v)));
    }
    let x = x.ok_or(Error::ZeroSection)?;
    let scale = num_traits::pow(p.clone(), x as usize);
    let sbar: Vec<u64> = coeffs
        .iter()
        .map(|a| (a / &scale).mod_floor(&p).to_u64().expect("reduced mod p"))
        .collect();
    let rest = coords.residual(&sbar).expect("content removed");
    let mut out = vec![x as i64];
    out.extend_from_slice(rest);
    Ok(out)
}

/// `ν` for small coefficients.
pub fn nu_small(coords: &FlagCoords, coeffs: &[i64]) -> Result<Vec<i64>> {
    let p = coords.p as i64;
    let mut x = u32::MAX;
    for &a in coeffs.iter().filter(|a| **a != 0) {
        let mut v = 0u32;
        let mut t = a;
        while t % p == 0 && v < x {
            t /= p;
            v += 1;
        }
        x = x.min(v);
    }
    if x == u32::MAX {
        return Err(Error::ZeroSection);
    }
    let scale = p.pow(x);
    let sbar: Vec<u64> = coeffs
        .iter()
        .map(|&a| (a / scale).rem_euclid(p) as u64)
        .collect();
    let rest = coords.residual(&sbar).expect("content removed");
    let mut out = vec![x as i64];
    out.extend_from_slice(rest);
    Ok(out)
}

pub fn nu(
    flag: &Flag,
    bundle: &HermitianLineBundle,
    m: u32,
    coeffs: &[BigInt],
) -> Result<Vec<i64>> {
    check_flag(flag, bundle)?;
    let expected = bundle.rank(m);
    if coeffs.len() != expected {
        return Err(Error::RankMismatch {
            expected,
            got: coeffs.len(),
        });
    }
    nu_with(&flag.coords(bundle.section_degree(m)), coeffs)
}

fn check_flag(flag: &Flag, bundle: &HermitianLineBundle) -> Result<()> {
    if flag.kind != bundle.model().kind() {
        return Err(Error::ModelMismatch(format!(
            "flag on {} vs bundle on {}",
            flag.kind,
            bundle.model().kind()
        )));
    }
    Ok(())
}

/// Per-axis upper bounds for valuations of effective sections of `mL̄`:
/// `[ν₁ max, degree bound(s)]`.  A negative first entry means no nonzero
/// effective section exists.
pub fn nu_bounds(flag: &Flag, bundle: &HermitianLineBundle, m: u32) -> Vec<i64> {
    let d = bundle.section_degree(m) as i64;
    let lambda = min_nonzero_norm_logbound(bundle, m);
    let mc = ratio_to_f64(&bundle.mc(m));
    let v = (mc - lambda) / (flag.p as f64).ln();
    // round towards the larger integer when within numerical noise
    let x = (v + 1e-9 * (1.0 + v.abs())).floor() as i64;
    let mut out = vec![x, d];
    if flag.kind == ModelKind::P2Z {
        out.push(d);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationImage {
    pub p: u64,
    pub m: u32,
    pub verified: BTreeSet<Vec<i64>>,
    pub unknown: BTreeSet<Vec<i64>>,
    pub bounds: Vec<i64>,
}

impl ValuationImage {
    pub fn len(&self) -> usize {
        self.verified.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verified.is_empty()
    }

    pub fn within_bounds(&self, pt: &[i64]) -> bool {
        pt.len() == self.bounds.len()
            && pt[0] <= self.bounds[0]
            && pt[1..].iter().sum::<i64>() <= self.bounds[1]
            && pt.iter().all(|&c| c >= 0)
    }
}

/// Image of the nonzero members of an enumerated effective set.
pub fn image_of_set(flag: &Flag, set: &EffectiveSectionSet) -> Result<BTreeSet<Vec<i64>>> {
    let coords = flag.coords(set.bundle.section_degree(set.m));
    set.nonzero().map(|s| nu_small(&coords, s)).collect()
}

/// `v_p` of the twist divisor of `mL̄` at the flag prime.
fn twist_exponent(flag: &Flag, bundle: &HermitianLineBundle, m: u32) -> i64 {
    bundle
        .divisibility(m)
        .into_iter()
        .find(|(q, _)| *q == flag.p)
        .map_or(0, |(_, e)| e as i64)
}

pub fn valuation_image_exact(
    bundle: &HermitianLineBundle,
    m: u32,
    flag: &Flag,
) -> Result<ValuationImage> {
    check_flag(flag, bundle)?;
    let set = enumerate_effective(bundle, m, crate::sections::DEFAULT_NODE_BUDGET)?;
    if set.ambiguous_count > 0 {
        return Err(Error::AmbiguousBoundary(set.ambiguous_count));
    }
    Ok(ValuationImage {
        p: flag.p,
        m,
        verified: image_of_set(flag, &set)?,
        unknown: BTreeSet::new(),
        bounds: nu_bounds(flag, bundle, m),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PointStatus {
    Verified,
    Excluded,
    Unknown,
}

/// Decides one candidate `(x, key)` by witness, then lattice search.
/// Works with `s'' = s / (N p^{x-e})`, where `N` is the twist divisor and
/// `e = v_p(N)`.
fn decide_point(
    coords: &FlagCoords,
    kernel: &NormKernel,
    threshold: &crate::numeric::Threshold,
    key: &[i64],
    budget: usize,
) -> PointStatus {
    let Some(w) = coords.witness(key) else {
        return PointStatus::Excluded;
    };
    match kernel.membership(Coeffs::Big(&w), threshold, MEMBERSHIP_CELLS) {
        Membership::In => return PointStatus::Verified,
        Membership::Out | Membership::Ambiguous => {}
    }
    let basis = coords.filtration_basis(key);
    let p = BigInt::from(coords.p);
    let mut repairs = 0usize;
    let mut repaired_ok = false;
    let outcome = search::search(&basis, kernel, threshold, budget, &mut |v| {
        let sbar: Vec<u64> = v
            .iter()
            .map(|a| a.mod_floor(&p).to_u64().expect("reduced"))
            .collect();
        match coords.residual(&sbar) {
            Some(k) if k == key => search::Verdict::Accept,
            Some(_) => {
                // valuation overshoots: try adding or subtracting the witness
                if repairs < 16 && !repaired_ok {
                    repairs += 1;
                    for sign in [1i64, -1] {
                        let cand: Vec<BigInt> =
                            v.iter().zip(&w).map(|(a, b)| a + b * sign).collect();
                        if kernel.membership(Coeffs::Big(&cand), threshold, MEMBERSHIP_CELLS)
                            == Membership::In
                        {
                            repaired_ok = true;
                        }
                    }
                }
                search::Verdict::Reject
            }
            None => search::Verdict::Reject,
        }
    });
    match outcome {
        SearchOutcome::Found(_) => PointStatus::Verified,
        _ if repaired_ok => PointStatus::Verified,
        SearchOutcome::None => PointStatus::Excluded,
        SearchOutcome::Unknown => PointStatus::Unknown,
    }
}

/// Valuation image of `Ĥ⁰(mL̄)` via lattice reduction: each candidate point
/// within [`nu_bounds`] is verified by an explicit section, excluded by an
/// exhausted search, or left unknown.  `budget` bounds the search nodes per
/// candidate point.
pub fn valuation_image_lattice(
    bundle: &HermitianLineBundle,
    m: u32,
    flag: &Flag,
    budget: usize,
) -> Result<ValuationImage> {
    check_flag(flag, bundle)?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let bounds = nu_bounds(flag, bundle, m);
    let coords = flag.coords(bundle.section_degree(m));
    let kernel = NormKernel::new(bundle, m);
    let base = bundle.reduced_threshold(m);
    let e = twist_exponent(flag, bundle, m);
    let mut tasks = Vec::new();
    for x in e..=bounds[0] {
        for key in coords.keys() {
            tasks.push((x, key.clone()));
        }
    }
    let run = |(x, key): &(i64, Vec<i64>)| {
        let t = base.clone().divide_by(flag.p, (x - e) as u64);
        let status = decide_point(&coords, &kernel, &t, key, budget);
        let mut pt = vec![*x];
        pt.extend_from_slice(key);
        (pt, status)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(Vec<i64>, PointStatus)> = {
        use rayon::prelude::*;
        tasks.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(Vec<i64>, PointStatus)> = tasks.iter().map(run).collect();
    let mut verified = BTreeSet::new();
    let mut unknown = BTreeSet::new();
    for (pt, st) in results {
        match st {
            PointStatus::Verified => {
                verified.insert(pt);
            }
            PointStatus::Unknown => {
                unknown.insert(pt);
            }
            PointStatus::Excluded => {}
        }
    }
    Ok(ValuationImage {
        p: flag.p,
        m,
        verified,
        unknown,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_bundle, make_model, MetricSpec};
    use crate::numeric::{log_upper, rational};
    use num_traits::Signed;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn can(c: num_rational::BigRational) -> HermitianLineBundle {
        make_bundle(make_model(ModelKind::P1Z), 1, MetricSpec::canonical(c)).unwrap()
    }

    #[test]
    fn flags() {
        let p1 = make_model(ModelKind::P1Z);
        assert!(make_flag(p1, 5, FlagPoint::Affine { alpha: 0 }).is_ok());
        assert_eq!(
            make_flag(p1, 4, FlagPoint::Affine { alpha: 1 }),
            Err(Error::NotPrime(4))
        );
        assert!(make_flag(p1, 7, FlagPoint::Infinity).is_ok());
        let p2 = make_model(ModelKind::P2Z);
        assert!(make_flag(
            p2,
            5,
            FlagPoint::Plane {
                line: [1, 0, 0],
                point: [0, 0, 1]
            }
        )
        .is_ok());
        assert!(matches!(
            make_flag(
                p2,
                5,
                FlagPoint::Plane {
                    line: [1, 0, 0],
                    point: [0, 7, 1]
                }
            ),
            Err(Error::NotRational(_))
        ));
        assert!(matches!(
            make_flag(
                p2,
                5,
                FlagPoint::Plane {
                    line: [1, 0, 0],
                    point: [1, 0, 1]
                }
            ),
            Err(Error::InvalidFlag(_))
        ));
    }

    #[test]
    fn nu_examples() {
        let b = can(rational(1, 1));
        let f = Flag::p1(5, Some(0)).unwrap();
        assert_eq!(nu(&f, &b, 3, &big(&[0, 0, 10, 25])).unwrap(), vec![1, 2]);
        assert_eq!(nu(&f, &b, 3, &big(&[1, 0, 0, 0])).unwrap(), vec![0, 0]);
        assert_eq!(nu(&f, &b, 1, &big(&[0, 5])).unwrap(), vec![1, 1]);
        assert_eq!(nu(&f, &b, 1, &big(&[-1, 1])).unwrap(), vec![0, 0]);
        assert_eq!(nu(&f, &b, 2, &big(&[0, -5, 5])).unwrap(), vec![1, 1]);
        assert_eq!(nu(&f, &b, 1, &big(&[0, 0])), Err(Error::ZeroSection));
        // at t = 1: (t - 1)^2 vanishes to order 2
        let g = Flag::p1(5, Some(1)).unwrap();
        assert_eq!(nu(&g, &b, 2, &big(&[1, -2, 1])).unwrap(), vec![0, 2]);
        // at infinity: degree drop
        let h = Flag::p1(7, None).unwrap();
        assert_eq!(nu(&h, &b, 3, &big(&[1, 1, 0, 0])).unwrap(), vec![0, 2]);
    }

    #[test]
    fn nu_plane() {
        let b = make_bundle(
            make_model(ModelKind::P2Z),
            1,
            MetricSpec::canonical(rational(1, 1)),
        )
        .unwrap();
        // line X1 = 0 (t1 = 0), point [1:0:0]
        let f = Flag::new(
            ModelKind::P2Z,
            3,
            FlagPoint::Plane {
                line: [0, 1, 0],
                point: [1, 0, 0],
            },
        )
        .unwrap();
        // basis at D=2: [1, t2, t2², t1, t1t2, t1²]; section t1·t2 has u-order 1, then v-order 1
        assert_eq!(
            nu(&f, &b, 2, &big(&[0, 0, 0, 0, 1, 0])).unwrap(),
            vec![0, 1, 1]
        );
        assert_eq!(
            nu(&f, &b, 2, &big(&[0, 0, 3, 0, 0, 0])).unwrap(),
            vec![1, 0, 2]
        );
        assert_eq!(
            nu(&f, &b, 2, &big(&[1, 0, 0, 0, 0, 0])).unwrap(),
            vec![0, 0, 0]
        );
    }

    #[test]
    fn bounds() {
        let f = Flag::p1(7, Some(0)).unwrap();
        assert_eq!(nu_bounds(&f, &can(rational(1, 1)), 20), vec![10, 20]);
        assert_eq!(nu_bounds(&f, &can(rational(0, 1)), 3)[0], 0);
        assert_eq!(nu_bounds(&f, &can(rational(1, 1)), 4)[1], 4);
    }

    #[test]
    fn exact_images() {
        let b = can(log_upper(2));
        let f = Flag::p1(2, Some(0)).unwrap();
        let img = valuation_image_exact(&b, 1, &f).unwrap();
        let want: BTreeSet<Vec<i64>> = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|v| v.to_vec())
            .collect();
        assert_eq!(img.verified, want);
        let z = can(rational(0, 1));
        for p in [2, 3, 5] {
            let img = valuation_image_exact(&z, 2, &Flag::p1(p, Some(0)).unwrap()).unwrap();
            assert_eq!(img.verified.len(), 3);
        }
        let neg = can(rational(-1, 1));
        assert!(valuation_image_exact(&neg, 1, &f)
            .unwrap()
            .verified
            .is_empty());
    }

    #[test]
    fn lattice_matches_exact_small() {
        for (p, alpha) in [(2u64, Some(0u64)), (3, Some(1)), (2, None), (5, Some(2))] {
            let f = Flag::p1(p, alpha).unwrap();
            for c in [rational(0, 1), log_upper(2), rational(1, 1)] {
                let b = can(c);
                for m in 1..=3 {
                    let ex = valuation_image_exact(&b, m, &f).unwrap();
                    let la = valuation_image_lattice(&b, m, &f, 1_000_000).unwrap();
                    assert!(la.unknown.is_empty());
                    assert_eq!(ex.verified, la.verified, "p={p} alpha={alpha:?} m={m}");
                }
            }
        }
    }

    #[test]
    fn lattice_matches_exact_plane_and_twisted() {
        let p2 = make_model(ModelKind::P2Z);
        let f = Flag::new(
            ModelKind::P2Z,
            2,
            FlagPoint::Plane {
                line: [0, 1, 0],
                point: [1, 0, 0],
            },
        )
        .unwrap();
        let g = Flag::new(
            ModelKind::P2Z,
            3,
            FlagPoint::Plane {
                line: [1, 1, 1],
                point: [1, 2, 0],
            },
        )
        .unwrap();
        for (c, top) in [(log_upper(2), 2), (rational(1, 1), 1)] {
            let b = make_bundle(p2, 1, MetricSpec::canonical(c)).unwrap();
            for flag in [&f, &g] {
                for m in 1..=top {
                    let ex = valuation_image_exact(&b, m, flag).unwrap();
                    let la = valuation_image_lattice(&b, m, flag, 1_000_000).unwrap();
                    assert!(la.unknown.is_empty());
                    assert_eq!(ex.verified, la.verified);
                }
            }
        }
        let fs = make_bundle(
            make_model(ModelKind::P1Z),
            1,
            MetricSpec::fubini_study(rational(1, 1)),
        )
        .unwrap();
        for m in 1..=2 {
            let flag = Flag::p1(3, Some(2)).unwrap();
            let ex = valuation_image_exact(&fs, m, &flag).unwrap();
            let la = valuation_image_lattice(&fs, m, &flag, 1_000_000).unwrap();
            assert!(la.unknown.is_empty());
            assert_eq!(ex.verified, la.verified);
        }
        let t = can(rational(2, 1))
            .twist(&rational(0, 1), &[(2, 1)])
            .unwrap();
        let f = Flag::p1(2, Some(1)).unwrap();
        for m in 1..=2 {
            let ex = valuation_image_exact(&t, m, &f).unwrap();
            let la = valuation_image_lattice(&t, m, &f, 1_000_000).unwrap();
            assert!(!ex.verified.is_empty());
            assert!(ex.verified.iter().all(|v| v[0] >= m as i64));
            assert_eq!(ex.verified, la.verified);
        }
    }

    #[test]
    fn filtration_basis_has_right_index() {
        let f = Flag::p1(5, Some(2)).unwrap();
        let coords = f.coords(3);
        let b = coords.filtration_basis(&[2]);
        let det = lll::determinant(&b);
        assert_eq!(det.abs(), BigInt::from(25));
        let w = coords.witness(&[2]).unwrap();
        assert_eq!(nu_with(&coords, &w).unwrap(), vec![0, 2]);
    }
}
