//! Bounded enumeration of lattice vectors inside a weighted L² ball
//! (Fincke–Pohst over an LLL-reduced basis), with a certified sup-norm
//! filter on every candidate.
//!
//! The sup-norm body `{sup |f| <= T}` lies inside the L² ball of radius `T`
//! for both metric families, so an exhausted enumeration of that ball proves
//! that no qualifying vector exists.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::lll::{gram, lll_reduce_weighted};
use crate::norms::{Coeffs, Membership, NormKernel};
use crate::numeric::Threshold;
use crate::sections::MEMBERSHIP_CELLS;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Vec<BigInt>),
    /// Certified: no lattice vector passes.
    None,
    /// Budget ran out, or a boundary case could not be decided.
    Unknown,
}

/// A lattice (rows of `basis`) and a sup-norm bound for its vectors.
#[derive(Debug, Clone)]
pub struct SublatticeProblem {
    pub basis: Vec<Vec<BigInt>>,
    pub bound: Threshold,
}

/// Verdict of a candidate filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Verdict {
    Accept,
    Reject,
}

/// Finds a nonzero lattice vector with certified raw sup-norm at most the
/// bound.  The basis is LLL-reduced internally under the kernel's L² form.
pub fn short_vector_search(
    problem: &SublatticeProblem,
    kernel: &NormKernel,
    budget: usize,
) -> SearchOutcome {
    search(&problem.basis, kernel, &problem.bound, budget, &mut |_| {
        Verdict::Accept
    })
}

/// Integer weights `W` and scale `L` with `L²-form = (1/L) Σ W_i x_i²`.
pub(crate) fn integer_weights(kernel: &NormKernel) -> (Vec<BigInt>, BigInt) {
    let mut l = BigInt::one();
    for w in kernel.weights() {
        l = num_integer::Integer::lcm(&l, w.denom());
    }
    let ws = kernel
        .weights()
        .iter()
        .map(|w| w.numer() * (&l / w.denom()))
        .collect();
    (ws, l)
}

pub(crate) fn search(
    basis: &[Vec<BigInt>],
    kernel: &NormKernel,
    bound: &Threshold,
    budget: usize,
    filter: &mut dyn FnMut(&[BigInt]) -> Verdict,
) -> SearchOutcome {
    if budget == 0 {
        return SearchOutcome::Unknown;
    }
    let (w, scale) = integer_weights(kernel);
    let Ok(red) = lll_reduce_weighted(basis, &w) else {
        return SearchOutcome::Unknown;
    };
    let b = red.basis;
    let n = b.len();
    if n == 0 {
        return SearchOutcome::None;
    }
    let g = gram(&b, &w);
    let gf: Vec<Vec<f64>> = g
        .iter()
        .map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::MAX)).collect())
        .collect();
    let mut mu = vec![vec![0.0f64; n]; n];
    let mut bb = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..i {
            let mut s = gf[i][j];
            for l in 0..j {
                s -= mu[j][l] * mu[i][l] * bb[l];
            }
            mu[i][j] = s / bb[j];
        }
        let mut s = gf[i][i];
        for j in 0..i {
            s -= mu[i][j] * mu[i][j] * bb[j];
        }
        bb[i] = s;
    }
    let (_, t2hi) = bound.squared_enclosure();
    let radius_sq = t2hi * scale.to_f64().unwrap_or(f64::MAX) * (1.0 + 1e-9) + 1e-9;
    let mut st = Enum {
        b: &b,
        mu: &mu,
        bb: &bb,
        radius_sq,
        x: vec![0i64; n],
        nodes: 0,
        budget,
        kernel,
        bound,
        ambiguous: false,
        found: None,
        exhausted: false,
    };
    st.level(n - 1, 0.0, true, filter);
    if let Some(v) = st.found {
        return SearchOutcome::Found(v);
    }
    if st.exhausted || st.ambiguous {
        return SearchOutcome::Unknown;
    }
    SearchOutcome::None
}

struct Enum<'a> {
    b: &'a [Vec<BigInt>],
    mu: &'a [Vec<f64>],
    bb: &'a [f64],
    radius_sq: f64,
    x: Vec<i64>,
    nodes: usize,
    budget: usize,
    kernel: &'a NormKernel,
    bound: &'a Threshold,
    ambiguous: bool,
    found: Option<Vec<BigInt>>,
    exhausted: bool,
}

impl Enum<'_> {
    fn done(&self) -> bool {
        self.found.is_some() || self.exhausted
    }

    fn level(
        &mut self,
        i: usize,
        partial: f64,
        all_zero: bool,
        filter: &mut dyn FnMut(&[BigInt]) -> Verdict,
    ) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let n = self.x.len();
        let c: f64 = -(i + 1..n)
            .map(|j| self.mu[j][i] * self.x[j] as f64)
            .sum::<f64>();
        let rem = self.radius_sq - partial;
        if rem < 0.0 {
            return;
        }
        let r = (rem / self.bb[i]).sqrt() * (1.0 + 1e-9) + 1e-9;
        let lo = (c - r).ceil() as i64;
        let hi = (c + r).floor() as i64;
        let lo = if all_zero { lo.max(0) } else { lo };
        if lo > hi {
            return;
        }
        // zig-zag from the centre so short vectors come first
        let mut vals: Vec<i64> = (lo..=hi).collect();
        vals.sort_by(|a, b| {
            let da = (*a as f64 - c).abs();
            let db = (*b as f64 - c).abs();
            da.total_cmp(&db).then(a.cmp(b))
        });
        for v in vals {
            let d = v as f64 - c;
            let p = partial + d * d * self.bb[i];
            if p > self.radius_sq {
                continue;
            }
            self.x[i] = v;
            let az = all_zero && v == 0;
            if i == 0 {
                if !az {
                    self.leaf(filter);
                }
            } else {
                self.level(i - 1, p, az, filter);
            }
            if self.done() {
                break;
            }
        }
        self.x[i] = 0;
    }

    fn leaf(&mut self, filter: &mut dyn FnMut(&[BigInt]) -> Verdict) {
        let dim = self.b[0].len();
        let mut v = vec![BigInt::zero(); dim];
        for (xi, bi) in self.x.iter().zip(self.b) {
            if *xi != 0 {
                let q = BigInt::from(*xi);
                for (t, s) in v.iter_mut().zip(bi) {
                    *t += &q * s;
                }
            }
        }
        if filter(&v) == Verdict::Reject {
            return;
        }
        match self
            .kernel
            .membership(Coeffs::Big(&v), self.bound, MEMBERSHIP_CELLS)
        {
            Membership::In => self.found = Some(v),
            Membership::Out => {}
            Membership::Ambiguous => self.ambiguous = true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MetricFamily, ModelKind};
    use crate::numeric::rational;

    fn basis(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    #[test]
    fn even_lattice() {
        let kernel = NormKernel::for_degree(ModelKind::P1Z, MetricFamily::Canonical, 1);
        let two = SublatticeProblem {
            basis: basis(&[&[2, 0], &[0, 2]]),
            bound: Threshold::rational(rational(2, 1)),
        };
        match short_vector_search(&two, &kernel, 10_000) {
            SearchOutcome::Found(v) => {
                let s: i64 = v.iter().map(|x| x.to_i64().unwrap().abs()).sum();
                assert_eq!(s, 2);
            }
            other => panic!("{other:?}"),
        }
        let one = SublatticeProblem {
            bound: Threshold::one(),
            ..two.clone()
        };
        assert_eq!(
            short_vector_search(&one, &kernel, 10_000),
            SearchOutcome::None
        );
        assert_eq!(
            short_vector_search(&two, &kernel, 0),
            SearchOutcome::Unknown
        );
    }

    #[test]
    fn skewed_basis_is_complete() {
        let kernel = NormKernel::for_degree(ModelKind::P1Z, MetricFamily::Canonical, 2);
        let b = basis(&[&[1, 5, 7], &[0, 3, 11], &[0, 0, 13]]);
        let prob = SublatticeProblem {
            basis: b,
            bound: Threshold::rational(rational(3, 1)),
        };
        let mut seen = Vec::new();
        let out = search(&prob.basis, &kernel, &prob.bound, 1_000_000, &mut |v| {
            seen.push(v.to_vec());
            Verdict::Reject
        });
        assert_eq!(out, SearchOutcome::None);
        // every lattice vector of L² norm <= 3 must have been offered
        let mut brute = 0;
        for a in -20i64..=20 {
            for b2 in -20i64..=20 {
                for c in -20i64..=20 {
                    let v = [a, 5 * a + 3 * b2, 7 * a + 11 * b2 + 13 * c];
                    let n2: i64 = v.iter().map(|x| x * x).sum();
                    if n2 > 0 && n2 <= 9 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(seen.len() * 2, brute);
    }
}
