//! Certified sup-norms and L²-norms of sections, and lattice-point bounds for
//! the unit-norm body.
//!
//! All sup-norm certificates work with `h = |f|²` on a compact parameter
//! domain:
//!
//! * canonical metric on `P1`: the unit circle, `θ ∈ [0, 2π)`;
//! * canonical metric on `P2`: the unit torus;
//! * Fubini–Study on `P1`: the square `[-1, 1]²` in the affine chart, once for
//!   `f` and once for the reversed polynomial (the other chart).
//!
//! Cells are refined best-first.  A cell's upper bound is a second-order
//! Taylor bound at its centre plus an explicit rounding margin, and a child's
//! bound never exceeds its parent's, so refinement is monotone.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{HermitianLineBundle, MetricFamily, ModelKind};
use crate::numeric::{ln_bigint, ln_gamma_half, Threshold, REL_EPS};
use crate::{Error, Result};

/// A closed interval `[lo, hi]` known to contain a real quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Enclosure { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Enclosure { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Product with a positive enclosure.
    pub fn times(&self, f: Enclosure) -> Enclosure {
        Enclosure::new(self.lo * f.lo, self.hi * f.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupOptions {
    /// Target width of the sup enclosure, relative to `max(1, sup)`.
    pub tolerance: f64,
    /// Maximum number of cell evaluations.
    pub budget: usize,
}

impl Default for SupOptions {
    fn default() -> Self {
        SupOptions {
            tolerance: 1e-9,
            budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Membership {
    In,
    Out,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBodyBounds {
    pub n: usize,
    pub inner_log_count: f64,
    pub outer_log_count: f64,
}

/// Integer coefficients in either machine or arbitrary precision.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Coeffs<'a> {
    Small(&'a [i64]),
    Big(&'a [BigInt]),
}

impl Coeffs<'_> {
    fn to_f64(self) -> Vec<f64> {
        match self {
            Coeffs::Small(a) => a.iter().map(|&x| x as f64).collect(),
            Coeffs::Big(a) => a.iter().map(big_to_f64).collect(),
        }
    }

    fn to_big(self) -> Vec<BigInt> {
        match self {
            Coeffs::Small(a) => a.iter().map(|&x| BigInt::from(x)).collect(),
            Coeffs::Big(a) => a.to_vec(),
        }
    }

    fn signs(&self) -> Vec<i8> {
        match self {
            Coeffs::Small(a) => a.iter().map(|x| x.signum() as i8).collect(),
            Coeffs::Big(a) => a
                .iter()
                .map(|x| {
                    if x.is_zero() {
                        0
                    } else if x.is_positive() {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
        }
    }
}

fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let s = if x.is_negative() { -1.0 } else { 1.0 };
        s * ln_bigint(x).exp()
    })
}

/// Per-(model, metric, degree) data reused across many norm evaluations.
#[derive(Debug, Clone)]
pub struct NormKernel {
    kind: ModelKind,
    family: MetricFamily,
    degree: usize,
    exps: Vec<Vec<usize>>,
    weights: Vec<BigRational>,
    weights_f: Vec<f64>,
    /// Fubini–Study: squared sup of each monomial, `i^i (D-i)^{D-i} / D^D`.
    mono_sq: Vec<BigRational>,
    mono_f: Vec<f64>,
}

impl NormKernel {
    pub fn new(bundle: &HermitianLineBundle, m: u32) -> Self {
        Self::for_degree(
            bundle.model().kind(),
            bundle.family(),
            bundle.section_degree(m),
        )
    }

    pub fn for_degree(kind: ModelKind, family: MetricFamily, degree: usize) -> Self {
        let exps = crate::model::ArithmeticModel::new(kind).monomials(degree);
        let n = exps.len();
        let (weights, mono_sq) = match family {
            MetricFamily::Canonical => (vec![BigRational::one(); n], vec![BigRational::one(); n]),
            MetricFamily::FubiniStudy => {
                let d = degree as u64;
                let w = (0..=d)
                    .map(|i| BigRational::new(BigInt::one(), BigInt::from(d + 1) * binomial(d, i)))
                    .collect();
                let ms = (0..=d)
                    .map(|i| {
                        if d == 0 {
                            return BigRational::one();
                        }
                        let num = pow_u(i, i) * pow_u(d - i, d - i);
                        BigRational::new(num, pow_u(d, d))
                    })
                    .collect();
                (w, ms)
            }
        };
        let weights_f = weights.iter().map(|w| w.to_f64().unwrap_or(0.0)).collect();
        let mono_f = mono_sq
            .iter()
            .map(|q: &BigRational| q.to_f64().unwrap_or(1.0).sqrt())
            .collect();
        NormKernel {
            kind,
            family,
            degree,
            exps,
            weights,
            weights_f,
            mono_sq,
            mono_f,
        }
    }

    pub fn rank(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn family(&self) -> MetricFamily {
        self.family
    }

    /// Weights of the (squared) L² form in the monomial basis.
    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn weights_f64(&self) -> &[f64] {
        &self.weights_f
    }

    pub(crate) fn l2_sq_exact(&self, c: Coeffs<'_>) -> BigRational {
        let big = c.to_big();
        let mut acc = BigRational::zero();
        for (a, w) in big.iter().zip(&self.weights) {
            if !a.is_zero() {
                acc += w * BigRational::from_integer(a * a);
            }
        }
        acc
    }

    fn l2_sq_f(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights_f).map(|(a, w)| a * a * w).sum()
    }

    /// Exact squared sup-norm when a closed form applies: zero, single
    /// monomials, and (canonical metric) sign-coherent sections, whose
    /// maximum sits at a point where every term has the same phase.
    pub(crate) fn sup_sq_exact(&self, c: Coeffs<'_>) -> Option<BigRational> {
        let signs = c.signs();
        let nz: Vec<usize> = (0..signs.len()).filter(|&i| signs[i] != 0).collect();
        if nz.is_empty() {
            return Some(BigRational::zero());
        }
        let big = || c.to_big();
        if nz.len() == 1 {
            let a = &big()[nz[0]];
            return Some(BigRational::from_integer(a * a) * &self.mono_sq[nz[0]]);
        }
        if self.family != MetricFamily::Canonical {
            return None;
        }
        let coherent = |flip: &[bool]| {
            let mut want = 0i8;
            for &i in &nz {
                let parity = self.exps[i]
                    .iter()
                    .zip(flip)
                    .filter(|(&e, &f)| f && e % 2 == 1)
                    .count();
                let s = if parity % 2 == 1 { -signs[i] } else { signs[i] };
                if want == 0 {
                    want = s;
                } else if s != want {
                    return false;
                }
            }
            true
        };
        let vars = self.exps[0].len();
        let patterns: Vec<Vec<bool>> = (0..(1usize << vars))
            .map(|mask| (0..vars).map(|v| mask >> v & 1 == 1).collect())
            .collect();
        if patterns.iter().any(|p| coherent(p)) {
            let s: BigInt = big().iter().map(|a| a.abs()).sum();
            return Some(BigRational::from_integer(&s * &s));
        }
        None
    }

    /// Cheap certified upper bound for the sup-norm (triangle inequality).
    fn abs_bound_f(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.mono_f).map(|(a, m)| a.abs() * m).sum()
    }

    /// Certified enclosure of the raw sup `max |f|` (no metric constant).
    pub(crate) fn sup_raw(&self, c: Coeffs<'_>, opts: &SupOptions) -> (Enclosure, bool) {
        if let Some(q) = self.sup_sq_exact(c) {
            if q.is_integer() {
                let r = q.numer().sqrt();
                if &(&r * &r) == q.numer() {
                    if let Some(x) = r.to_f64().filter(|x| x.abs() < 9.0e15) {
                        return (Enclosure::point(x), true);
                    }
                }
            }
            let x = q.to_f64().unwrap_or(f64::INFINITY).sqrt();
            let slack = x * 4.0 * f64::EPSILON;
            return (Enclosure::new((x - slack).max(0.0), x + slack), true);
        }
        let f = c.to_f64();
        let r = self.bnb(&f, opts.budget, Some(opts.tolerance), None);
        let enc = Enclosure::new(r.lo_h.max(0.0).sqrt(), r.hi_h.max(0.0).sqrt());
        (enc, r.converged)
    }

    /// Decides `sup |f| <= T` for the raw sup.
    pub(crate) fn membership(&self, c: Coeffs<'_>, t: &Threshold, budget: usize) -> Membership {
        let (t2lo, t2hi) = t.squared_enclosure();
        let f = c.to_f64();
        if f.iter().all(|&x| x == 0.0) {
            return Membership::In;
        }
        let fuzz = 1e-12;
        let l2 = self.l2_sq_f(&f);
        if l2 * (1.0 - fuzz) > t2hi {
            return Membership::Out;
        }
        let ab = self.abs_bound_f(&f);
        if ab * ab * (1.0 + fuzz) < t2lo {
            return Membership::In;
        }
        if let Some(q) = self.sup_sq_exact(c) {
            return match t.cmp_exact_squared(&q) {
                Ordering::Less => Membership::In,
                Ordering::Greater => Membership::Out,
                Ordering::Equal if t.is_rational() => Membership::In,
                Ordering::Equal => Membership::Ambiguous,
            };
        }
        if l2 * (1.0 + fuzz) >= t2lo {
            // near the boundary: settle the L² test exactly
            if t.cmp_exact_squared(&self.l2_sq_exact(c)) == Ordering::Greater {
                return Membership::Out;
            }
        }
        if self.family == MetricFamily::Canonical && ab * ab * (1.0 - fuzz) <= t2hi {
            let s: BigInt = c.to_big().iter().map(|a| a.abs()).sum();
            let ord = t.cmp_exact_squared(&BigRational::from_integer(&s * &s));
            if ord == Ordering::Less || (ord == Ordering::Equal && t.is_rational()) {
                return Membership::In;
            }
        }
        let r = self.bnb(&f, budget, None, Some((t2lo, t2hi)));
        r.decision.unwrap_or(Membership::Ambiguous)
    }

    fn bnb(
        &self,
        f: &[f64],
        budget: usize,
        tolerance: Option<f64>,
        decision: Option<(f64, f64)>,
    ) -> BnbResult {
        match (self.kind, self.family) {
            (ModelKind::P1Z, MetricFamily::Canonical) => {
                run_bnb(&CircleObjective::new(f), budget, tolerance, decision)
            }
            (ModelKind::P2Z, _) => run_bnb(
                &TorusObjective::new(f, &self.exps),
                budget,
                tolerance,
                decision,
            ),
            (ModelKind::P1Z, MetricFamily::FubiniStudy) => {
                run_bnb(&FsObjective::new(f), budget, tolerance, decision)
            }
        }
    }
}

fn binomial(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

fn pow_u(b: u64, e: u64) -> BigInt {
    num_traits::pow(BigInt::from(b), e as usize)
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    x: f64,
    y: f64,
    r: f64,
    part: u8,
    ub: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.ub.total_cmp(&other.ub) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub.total_cmp(&other.ub)
    }
}

trait Objective {
    fn dims(&self) -> usize;
    fn initial(&self) -> Vec<Cell>;
    /// `(certified lower bound for h at the centre, upper bound on the cell)`
    fn eval(&self, c: &Cell) -> (f64, f64);
}

struct BnbResult {
    lo_h: f64,
    hi_h: f64,
    converged: bool,
    decision: Option<Membership>,
}

fn run_bnb<O: Objective>(
    obj: &O,
    budget: usize,
    tolerance: Option<f64>,
    decision: Option<(f64, f64)>,
) -> BnbResult {
    let mut heap = BinaryHeap::new();
    let mut best = f64::NEG_INFINITY;
    let mut evals = 0usize;
    for mut c in obj.initial() {
        let (lo, ub) = obj.eval(&c);
        evals += 1;
        best = best.max(lo);
        c.ub = ub;
        heap.push(c);
    }
    loop {
        let top = heap.peek().map(|c| c.ub).unwrap_or(f64::NEG_INFINITY);
        let hi = top.max(best);
        let lo = best.max(0.0);
        if let Some((tlo, thi)) = decision {
            if hi <= tlo {
                return BnbResult {
                    lo_h: lo,
                    hi_h: hi,
                    converged: true,
                    decision: Some(Membership::In),
                };
            }
            if best > thi {
                return BnbResult {
                    lo_h: lo,
                    hi_h: hi,
                    converged: true,
                    decision: Some(Membership::Out),
                };
            }
        }
        if let Some(tol) = tolerance {
            let (s_lo, s_hi) = (lo.sqrt(), hi.max(0.0).sqrt());
            if s_hi - s_lo <= tol * s_hi.max(1.0) {
                return BnbResult {
                    lo_h: lo,
                    hi_h: hi,
                    converged: true,
                    decision: None,
                };
            }
        }
        if top <= best || evals >= budget {
            let done = top <= best;
            return BnbResult {
                lo_h: lo,
                hi_h: hi,
                converged: done && tolerance.is_some(),
                decision: None,
            };
        }
        let parent = heap.pop().expect("nonempty heap");
        let h = parent.r * 0.5;
        let offsets: &[(f64, f64)] = if obj.dims() == 1 {
            &[(-1.0, 0.0), (1.0, 0.0)]
        } else {
            &[(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
        };
        for &(dx, dy) in offsets {
            let mut c = Cell {
                x: parent.x + dx * h,
                y: parent.y + dy * h,
                r: h,
                part: parent.part,
                ub: 0.0,
            };
            let (lo, ub) = obj.eval(&c);
            evals += 1;
            best = best.max(lo);
            c.ub = ub.min(parent.ub);
            if c.ub > best {
                heap.push(c);
            }
        }
    }
}

/// Relative size of the floating-point evaluation error of `|f|²`.
fn rounding_margin(terms: usize, scale_sq: f64) -> f64 {
    1e-14 * (terms as f64 + 2.0) * scale_sq + f64::MIN_POSITIVE
}

struct CircleObjective {
    a: Vec<f64>,
    m2: f64,
    err: f64,
    n0: usize,
}

impl CircleObjective {
    fn new(a: &[f64]) -> Self {
        let d = a.len().saturating_sub(1);
        // h(θ) = Σ_k r_k e^{ikθ}; |h''| <= Σ_k k² |r_k|
        let mut m2 = 0.0;
        for k in 1..=d {
            let rk: f64 = (0..=d - k).map(|j| a[j] * a[j + k]).sum();
            m2 += 2.0 * (k * k) as f64 * rk.abs();
        }
        let s: f64 = a.iter().map(|x| x.abs()).sum();
        CircleObjective {
            a: a.to_vec(),
            m2: m2 * (1.0 + 1e-12) + rounding_margin(a.len(), s * s) * ((d * d) as f64 + 1.0),
            err: rounding_margin(a.len(), s * s),
            n0: (8 * (d + 1)).max(32),
        }
    }
}

impl Objective for CircleObjective {
    fn dims(&self) -> usize {
        1
    }

    fn initial(&self) -> Vec<Cell> {
        let w = std::f64::consts::TAU / self.n0 as f64;
        (0..self.n0)
            .map(|k| Cell {
                x: (k as f64 + 0.5) * w,
                y: 0.0,
                r: 0.5 * w,
                part: 0,
                ub: 0.0,
            })
            .collect()
    }

    fn eval(&self, c: &Cell) -> (f64, f64) {
        let z = Complex64::from_polar(1.0, c.x);
        let mut f = Complex64::new(0.0, 0.0);
        let mut g = Complex64::new(0.0, 0.0);
        for (j, &aj) in self.a.iter().enumerate().rev() {
            f = f * z + aj;
            g = g * z + aj * j as f64;
        }
        let h = f.norm_sqr();
        let dh = -2.0 * (f.conj() * g).im;
        let ub = h + dh.abs() * c.r + 0.5 * self.m2 * c.r * c.r + self.err;
        (h - self.err, ub)
    }
}

struct TorusObjective {
    terms: Vec<(usize, usize, f64)>,
    degree: usize,
    k2: f64,
    err: f64,
    n0: usize,
}

impl TorusObjective {
    fn new(a: &[f64], exps: &[Vec<usize>]) -> Self {
        let terms: Vec<(usize, usize, f64)> = a
            .iter()
            .zip(exps)
            .filter(|(x, _)| **x != 0.0)
            .map(|(&x, e)| (e[0], e[1], x))
            .collect();
        let degree = exps.iter().map(|e| e[0] + e[1]).max().unwrap_or(0);
        let side = 2 * degree + 1;
        let mut r = vec![0.0f64; side * side];
        for &(i, j, x) in &terms {
            for &(k, l, y) in &terms {
                let u = i + degree - k;
                let v = j + degree - l;
                r[u * side + v] += x * y;
            }
        }
        let mut k2 = 0.0;
        for u in 0..side {
            for v in 0..side {
                let kk = (u as i64 - degree as i64).abs() + (v as i64 - degree as i64).abs();
                k2 += r[u * side + v].abs() * (kk * kk) as f64;
            }
        }
        let s: f64 = terms.iter().map(|t| t.2.abs()).sum();
        let err = rounding_margin(terms.len() + degree, s * s);
        TorusObjective {
            terms,
            degree,
            k2: k2 * (1.0 + 1e-12) + err * (4.0 * (degree * degree) as f64 + 1.0),
            err,
            n0: (2 * (degree + 1)).max(8),
        }
    }
}

impl Objective for TorusObjective {
    fn dims(&self) -> usize {
        2
    }

    fn initial(&self) -> Vec<Cell> {
        let w = std::f64::consts::TAU / self.n0 as f64;
        let mut out = Vec::with_capacity(self.n0 * self.n0);
        for i in 0..self.n0 {
            for j in 0..self.n0 {
                out.push(Cell {
                    x: (i as f64 + 0.5) * w,
                    y: (j as f64 + 0.5) * w,
                    r: 0.5 * w,
                    part: 0,
                    ub: 0.0,
                });
            }
        }
        out
    }

    fn eval(&self, c: &Cell) -> (f64, f64) {
        let z1 = Complex64::from_polar(1.0, c.x);
        let z2 = Complex64::from_polar(1.0, c.y);
        let mut p1 = Vec::with_capacity(self.degree + 1);
        let mut p2 = Vec::with_capacity(self.degree + 1);
        let (mut a, mut b) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        for _ in 0..=self.degree {
            p1.push(a);
            p2.push(b);
            a *= z1;
            b *= z2;
        }
        let mut f = Complex64::new(0.0, 0.0);
        let mut g1 = Complex64::new(0.0, 0.0);
        let mut g2 = Complex64::new(0.0, 0.0);
        for &(i, j, x) in &self.terms {
            let t = p1[i] * p2[j] * x;
            f += t;
            g1 += t * i as f64;
            g2 += t * j as f64;
        }
        let h = f.norm_sqr();
        let h1 = -2.0 * (f.conj() * g1).im;
        let h2 = -2.0 * (f.conj() * g2).im;
        let ub = h + (h1.abs() + h2.abs()) * c.r + 0.5 * self.k2 * c.r * c.r + self.err;
        (h - self.err, ub)
    }
}

/// `|f(t)|² / (1 + |t|²)^D` on `[-1,1]²`, for `f` (part 0) and its reversal
/// (part 1); together the two squares cover the whole projective line.
struct FsObjective {
    polys: [Vec<f64>; 2],
    k: [f64; 2],
    err: [f64; 2],
    degree: usize,
}

impl FsObjective {
    fn new(a: &[f64]) -> Self {
        let d = a.len().saturating_sub(1);
        let rev: Vec<f64> = a.iter().rev().copied().collect();
        let df = d as f64;
        let consts = |p: &[f64]| {
            let s2 = std::f64::consts::SQRT_2;
            let mut a0 = 0.0;
            let mut a1 = 0.0;
            let mut a2 = 0.0;
            for (j, &x) in p.iter().enumerate() {
                let jf = j as f64;
                a0 += x.abs() * s2.powi(j as i32);
                if j >= 1 {
                    a1 += jf * x.abs() * s2.powi(j as i32 - 1);
                }
                if j >= 2 {
                    a2 += jf * (jf - 1.0) * x.abs() * s2.powi(j as i32 - 2);
                }
            }
            let hp = 2.0 * (a1 * a1 + a0 * a2);
            let hw = 2.0 * df + df * (df + 1.0);
            let k = hp + 2.0 * (2.0 * a0 * a1) * df + a0 * a0 * hw;
            let err = rounding_margin(p.len() + d, a0 * a0);
            (k * (1.0 + 1e-12) + err * (hw + 1.0), err)
        };
        let (k0, e0) = consts(a);
        let (k1, e1) = consts(&rev);
        FsObjective {
            polys: [a.to_vec(), rev],
            k: [k0, k1],
            err: [e0, e1],
            degree: d,
        }
    }
}

impl Objective for FsObjective {
    fn dims(&self) -> usize {
        2
    }

    fn initial(&self) -> Vec<Cell> {
        let n = 8;
        let w = 2.0 / n as f64;
        let mut out = Vec::with_capacity(2 * n * n);
        for part in 0..2u8 {
            for i in 0..n {
                for j in 0..n {
                    out.push(Cell {
                        x: -1.0 + (i as f64 + 0.5) * w,
                        y: -1.0 + (j as f64 + 0.5) * w,
                        r: 0.5 * w,
                        part,
                        ub: 0.0,
                    });
                }
            }
        }
        out
    }

    fn eval(&self, c: &Cell) -> (f64, f64) {
        let p = &self.polys[c.part as usize];
        let t = Complex64::new(c.x, c.y);
        let mut f = Complex64::new(0.0, 0.0);
        let mut fp = Complex64::new(0.0, 0.0);
        for &aj in p.iter().rev() {
            fp = fp * t + f;
            f = f * t + aj;
        }
        let pv = f.norm_sqr();
        let cf = f.conj() * fp;
        let (px, py) = (2.0 * cf.re, -2.0 * cf.im);
        let rho2 = c.x * c.x + c.y * c.y;
        let d = self.degree as f64;
        let w = (1.0 + rho2).powf(-d);
        let dw = -2.0 * d * w / (1.0 + rho2);
        let q = pv * w;
        let gx = w * px + pv * dw * c.x;
        let gy = w * py + pv * dw * c.y;
        let k = self.k[c.part as usize];
        let err = self.err[c.part as usize];
        let ub = q + gx.hypot(gy) * std::f64::consts::SQRT_2 * c.r + k * c.r * c.r + err;
        (q - err, ub)
    }
}

fn check_rank(bundle: &HermitianLineBundle, m: u32, len: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let expected = bundle.rank(m);
    if expected != len {
        return Err(Error::RankMismatch { expected, got: len });
    }
    Ok(())
}

/// Enclosure of `e^{-mc}`.
fn metric_factor(bundle: &HermitianLineBundle, m: u32) -> Enclosure {
    let t = Threshold::new(-bundle.mc(m));
    let (lo, hi) = t.enclosure();
    Enclosure::new(lo, hi)
}

/// Certified enclosure of `sup ‖s‖` over the complex points, default options.
pub fn sup_norm(bundle: &HermitianLineBundle, m: u32, coeffs: &[BigInt]) -> Result<Enclosure> {
    sup_norm_with(bundle, m, coeffs, &SupOptions::default())
}

pub fn sup_norm_with(
    bundle: &HermitianLineBundle,
    m: u32,
    coeffs: &[BigInt],
    opts: &SupOptions,
) -> Result<Enclosure> {
    let (enc, converged) = sup_norm_budgeted(bundle, m, coeffs, opts)?;
    if !converged {
        return Err(Error::BudgetExhausted(format!(
            "sup-norm enclosure [{}, {}] after {} cells",
            enc.lo, enc.hi, opts.budget
        )));
    }
    Ok(enc)
}

/// Like [`sup_norm_with`], but returns the current enclosure with a
/// convergence flag instead of failing when the budget runs out.
pub fn sup_norm_budgeted(
    bundle: &HermitianLineBundle,
    m: u32,
    coeffs: &[BigInt],
    opts: &SupOptions,
) -> Result<(Enclosure, bool)> {
    check_rank(bundle, m, coeffs.len())?;
    let kernel = NormKernel::new(bundle, m);
    let (raw, converged) = kernel.sup_raw(Coeffs::Big(coeffs), opts);
    Ok((raw.times(metric_factor(bundle, m)), converged))
}

/// Squared L² norm of the raw section (without the `e^{-mc}` factor).
pub fn l2_norm(bundle: &HermitianLineBundle, m: u32, coeffs: &[BigInt]) -> Result<BigRational> {
    check_rank(bundle, m, coeffs.len())?;
    Ok(NormKernel::new(bundle, m).l2_sq_exact(Coeffs::Big(coeffs)))
}

/// `λ` such that every nonzero integer section has `log ‖s‖_sup >= λ − m·c`.
pub fn min_nonzero_norm_logbound(bundle: &HermitianLineBundle, m: u32) -> f64 {
    match bundle.family() {
        MetricFamily::Canonical => 0.0,
        MetricFamily::FubiniStudy => {
            let kernel = NormKernel::new(bundle, m);
            let min = kernel
                .weights_f64()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            0.5 * min.ln()
        }
    }
}

/// Whether `coeffs` is an effective section of `mL̄`: divisible by every
/// twist prime power and of sup-norm at most one.
pub fn membership(
    bundle: &HermitianLineBundle,
    m: u32,
    coeffs: &[BigInt],
    budget: usize,
) -> Result<Membership> {
    check_rank(bundle, m, coeffs.len())?;
    let n = bundle.divisor(m);
    if coeffs.iter().any(|a| !(a % &n).is_zero()) {
        return Ok(Membership::Out);
    }
    let reduced: Vec<BigInt> = coeffs.iter().map(|a| a / &n).collect();
    let kernel = NormKernel::new(bundle, m);
    Ok(kernel.membership(Coeffs::Big(&reduced), &bundle.reduced_threshold(m), budget))
}

/// Number of integer points with `Σ|x_i| <= k` in dimension `n`.
pub fn cross_polytope_count(n: usize, k: &BigUint) -> BigUint {
    let mut total = BigUint::zero();
    let mut c_nk = BigUint::one();
    let mut c_kk = BigUint::one();
    let mut pow2 = BigUint::one();
    for j in 0..=n {
        if j > 0 {
            let jj = BigUint::from(j);
            if &jj > k {
                break;
            }
            c_nk = c_nk * BigUint::from(n - j + 1) / &jj;
            c_kk = c_kk * (k - &jj + 1u32) / &jj;
            pow2 <<= 1;
        }
        total += &pow2 * &c_nk * &c_kk;
    }
    total
}

fn ln_biguint(x: &BigUint) -> f64 {
    ln_bigint(&BigInt::from(x.clone()))
}

/// Log-counts of integer points inside and around the effective body of `mL̄`.
pub fn norm_body_bounds(bundle: &HermitianLineBundle, m: u32) -> NormBodyBounds {
    let n = bundle.rank(m);
    let t = bundle.reduced_threshold(m);
    let kernel = NormKernel::new(bundle, m);
    let k = t.floor_lower_big();
    let inner = ln_biguint(&cross_polytope_count(n, &k));
    let (_, t_hi) = t.enclosure();
    let floor_norm = min_nonzero_norm_logbound(bundle, m).exp();
    let outer = if t_hi < floor_norm * (1.0 - 1e-12) {
        0.0
    } else {
        let w = kernel.weights_f64();
        let sum_w: f64 = w.iter().sum();
        let rho = t_hi + 0.5 * sum_w.sqrt();
        let log_vol = 0.5 * n as f64 * std::f64::consts::PI.ln() - ln_gamma_half(n as u64 + 2)
            + n as f64 * rho.ln()
            - 0.5 * w.iter().map(|x| x.ln()).sum::<f64>();
        log_vol * (1.0 + REL_EPS) + 1e-12
    };
    NormBodyBounds {
        n,
        inner_log_count: inner,
        outer_log_count: outer.max(inner),
    }
}
