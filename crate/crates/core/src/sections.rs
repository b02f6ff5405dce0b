//! Integer sections of `mL̄`: bases, exhaustive enumeration of the effective
//! set `Ĥ⁰`, its log-cardinality `ĥ⁰` (exact or as a band), and product sets
//! `V_{k,n}`.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering as AtomicOrdering};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::model::{ArithmeticModel, HermitianLineBundle, ModelKind};
use crate::norms::{norm_body_bounds, Coeffs, Membership, NormKernel};
use crate::numeric::{ratio_to_f64, Threshold};
use crate::{Error, Result};

/// Largest lattice rank handled by exhaustive enumeration.
pub const MAX_EXACT_RANK: usize = 32;
/// Largest threshold `e^{mc}/N` handled by exhaustive enumeration.
pub const DEFAULT_BOX_LIMIT: f64 = 64.0;
/// Node budget used by [`hzero_exact`] and [`hzero_band`].
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000_000;
/// Subdivision cells allowed per boundary decision during enumeration.
pub const MEMBERSHIP_CELLS: usize = 200_000;

/// The free module `H⁰(X, mL)` with its monomial basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionLattice {
    pub kind: ModelKind,
    pub degree: usize,
    pub rank: usize,
    pub exponents: Vec<Vec<usize>>,
}

impl SectionLattice {
    pub fn new(bundle: &HermitianLineBundle, m: u32) -> Self {
        let model = bundle.model();
        let degree = bundle.section_degree(m);
        let exponents = model.monomials(degree);
        SectionLattice {
            kind: model.kind(),
            degree,
            rank: exponents.len(),
            exponents,
        }
    }
}

pub fn basis_rank(bundle: &HermitianLineBundle, m: u32) -> usize {
    bundle.rank(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSectionSet {
    pub bundle: HermitianLineBundle,
    pub m: u32,
    pub rank: usize,
    /// Sorted lexicographically; coefficients in the monomial basis.
    pub members: Vec<Vec<i64>>,
    pub ambiguous_count: usize,
}

impl EffectiveSectionSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, s: &[i64]) -> bool {
        self.members
            .binary_search_by(|x| x.as_slice().cmp(s))
            .is_ok()
    }

    /// Nonzero members.
    pub fn nonzero(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.members.iter().filter(|s| s.iter().any(|&a| a != 0))
    }
}

/// Checks the exact-enumeration scope of `mL̄`.
pub fn check_scope(bundle: &HermitianLineBundle, m: u32, box_limit: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let rank = bundle.rank(m);
    if rank > MAX_EXACT_RANK {
        return Err(Error::ScopeExceeded(format!(
            "rank {rank} exceeds {MAX_EXACT_RANK}"
        )));
    }
    let (_, t_hi) = bundle.reduced_threshold(m).enclosure();
    if t_hi > box_limit {
        return Err(Error::ScopeExceeded(format!(
            "threshold {t_hi:.6} exceeds box limit {box_limit}"
        )));
    }
    if bundle.divisor(m).to_i64().is_none() {
        return Err(Error::ScopeExceeded(
            "divisor does not fit in 64 bits".into(),
        ));
    }
    Ok(())
}

/// All effective sections of `mL̄`, with the default box limit.
pub fn enumerate_effective(
    bundle: &HermitianLineBundle,
    m: u32,
    budget: usize,
) -> Result<EffectiveSectionSet> {
    enumerate_effective_with(bundle, m, budget, DEFAULT_BOX_LIMIT)
}

pub fn enumerate_effective_with(
    bundle: &HermitianLineBundle,
    m: u32,
    budget: usize,
    box_limit: f64,
) -> Result<EffectiveSectionSet> {
    enumerate_scaled(bundle, m, &BigRational::one(), budget, box_limit)
}

/// Effective sections of `mL̄` for the metric scaled by `1/factor`, that is
/// with the threshold multiplied by `factor`.
pub fn enumerate_scaled(
    bundle: &HermitianLineBundle,
    m: u32,
    factor: &BigRational,
    budget: usize,
    box_limit: f64,
) -> Result<EffectiveSectionSet> {
    check_scope(bundle, m, box_limit / ratio_to_f64(factor).max(1.0))?;
    if budget == 0 {
        return Err(Error::BudgetExhausted("enumeration budget is zero".into()));
    }
    let kernel = NormKernel::new(bundle, m);
    let threshold = bundle.reduced_threshold(m).times(factor);
    let divisor = bundle.divisor(m).to_i64().expect("checked in scope");
    let search = BallSearch::new(&kernel, &threshold, budget);
    let (found, ambiguous) = search.run()?;
    let mut members = Vec::with_capacity(2 * found.len() + 1);
    members.push(vec![0i64; kernel.rank()]);
    for s in found {
        let scaled: Option<Vec<i64>> = s.iter().map(|&a| a.checked_mul(divisor)).collect();
        let scaled = scaled.ok_or_else(|| Error::ScopeExceeded("coefficient overflow".into()))?;
        members.push(scaled.iter().map(|a| -a).collect());
        members.push(scaled);
    }
    members.sort();
    members.dedup();
    Ok(EffectiveSectionSet {
        bundle: bundle.clone(),
        m,
        rank: kernel.rank(),
        members,
        ambiguous_count: 2 * ambiguous,
    })
}

/// Depth-first search over integer vectors in the weighted L² ball of radius
/// `T`, which contains the sup-norm body; each leaf is then certified.
/// Only one vector of each `±` pair is visited.
struct BallSearch<'a> {
    kernel: &'a NormKernel,
    threshold: &'a Threshold,
    order: Vec<usize>,
    weights: Vec<f64>,
    radius_sq: f64,
    budget: usize,
    nodes: AtomicUsize,
    exhausted: AtomicBool,
}

impl<'a> BallSearch<'a> {
    fn new(kernel: &'a NormKernel, threshold: &'a Threshold, budget: usize) -> Self {
        let weights = kernel.weights_f64().to_vec();
        let mut order: Vec<usize> = (0..weights.len()).collect();
        // heavier weights prune harder, so they go first
        order.sort_by(|&i, &j| weights[j].total_cmp(&weights[i]).then(i.cmp(&j)));
        let (_, t2hi) = threshold.squared_enclosure();
        BallSearch {
            kernel,
            threshold,
            order,
            weights,
            radius_sq: t2hi * (1.0 + 1e-12),
            budget,
            nodes: AtomicUsize::new(0),
            exhausted: AtomicBool::new(false),
        }
    }

    fn range(&self, depth: usize, partial: f64) -> i64 {
        let w = self.weights[self.order[depth]];
        let rem = self.radius_sq - partial;
        if rem < 0.0 {
            return -1;
        }
        let r = (rem / w).sqrt();
        // guard against sqrt rounding just below an integer
        let mut k = r.floor() as i64;
        while ((k + 1) as f64).powi(2) * w <= rem {
            k += 1;
        }
        k
    }

    fn run(&self) -> Result<(Vec<Vec<i64>>, usize)> {
        let n = self.order.len();
        let top = self.range(0, 0.0);
        let branch = |v: i64| {
            let mut s = vec![0i64; n];
            let mut out = Vec::new();
            let mut amb = 0usize;
            s[self.order[0]] = v;
            let w = self.weights[self.order[0]];
            self.dfs(1, (v * v) as f64 * w, v == 0, &mut s, &mut out, &mut amb);
            (out, amb)
        };
        let values: Vec<i64> = (0..=top.max(-1)).collect();
        #[cfg(feature = "parallel")]
        let parts: Vec<(Vec<Vec<i64>>, usize)> = {
            use rayon::prelude::*;
            values.par_iter().map(|&v| branch(v)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<(Vec<Vec<i64>>, usize)> = values.iter().map(|&v| branch(v)).collect();
        if self.exhausted.load(AtomicOrdering::Relaxed) {
            return Err(Error::BudgetExhausted(format!(
                "enumeration exceeded {} nodes",
                self.budget
            )));
        }
        let mut found = Vec::new();
        let mut amb = 0;
        for (f, a) in parts {
            found.extend(f);
            amb += a;
        }
        Ok((found, amb))
    }

    fn tick(&self) -> bool {
        if self.exhausted.load(AtomicOrdering::Relaxed) {
            return false;
        }
        if self.nodes.fetch_add(1, AtomicOrdering::Relaxed) >= self.budget {
            self.exhausted.store(true, AtomicOrdering::Relaxed);
            return false;
        }
        true
    }

    fn dfs(
        &self,
        depth: usize,
        partial: f64,
        all_zero: bool,
        s: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
        amb: &mut usize,
    ) {
        if !self.tick() {
            return;
        }
        if depth == self.order.len() {
            if all_zero {
                return;
            }
            match self
                .kernel
                .membership(Coeffs::Small(s), self.threshold, MEMBERSHIP_CELLS)
            {
                Membership::In => out.push(s.clone()),
                Membership::Out => {}
                Membership::Ambiguous => *amb += 1,
            }
            return;
        }
        let k = self.range(depth, partial);
        if k < 0 {
            return;
        }
        let idx = self.order[depth];
        let w = self.weights[idx];
        let lo = if all_zero { 0 } else { -k };
        for v in lo..=k {
            s[idx] = v;
            self.dfs(
                depth + 1,
                partial + (v * v) as f64 * w,
                all_zero && v == 0,
                s,
                out,
                amb,
            );
            if self.exhausted.load(AtomicOrdering::Relaxed) {
                break;
            }
        }
        s[idx] = 0;
    }
}

/// `ĥ⁰(mL̄) = log #Ĥ⁰(X, mL̄)`.
pub fn hzero_exact(bundle: &HermitianLineBundle, m: u32) -> Result<f64> {
    let set = enumerate_effective(bundle, m, DEFAULT_NODE_BUDGET)?;
    if set.ambiguous_count > 0 {
        return Err(Error::AmbiguousBoundary(set.ambiguous_count));
    }
    Ok((set.len() as f64).ln())
}

/// Enclosure `(lo, hi)` of `ĥ⁰(mL̄)`: lattice-point bounds, replaced by the
/// exact count when the enumeration is in scope and finishes.
pub fn hzero_band(bundle: &HermitianLineBundle, m: u32) -> (f64, f64) {
    hzero_band_with(bundle, m, 50_000_000)
}

pub fn hzero_band_with(bundle: &HermitianLineBundle, m: u32, budget: usize) -> (f64, f64) {
    let nb = norm_body_bounds(bundle, m);
    let (mut lo, mut hi) = (nb.inner_log_count, nb.outer_log_count);
    if let Ok(set) = enumerate_effective(bundle, m, budget) {
        let certain = (set.len() as f64).ln();
        let possible = ((set.len() + set.ambiguous_count) as f64).ln();
        lo = lo.max(certain);
        hi = hi.min(possible).max(lo);
        if set.ambiguous_count == 0 {
            return (certain, certain);
        }
    }
    (lo, hi)
}

/// Product of two sections of degrees `da` and `db` in the monomial bases.
pub fn multiply(kind: ModelKind, da: usize, a: &[i64], db: usize, b: &[i64]) -> Option<Vec<i64>> {
    let model = ArithmeticModel::new(kind);
    let ea = model.monomials(da);
    let eb = model.monomials(db);
    let ec = model.monomials(da + db);
    let index: HashMap<&[usize], usize> = ec
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_slice(), i))
        .collect();
    let mut out = vec![0i64; ec.len()];
    let mut key = vec![0usize; ea.first().map_or(0, |e| e.len())];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if *y == 0 {
                continue;
            }
            for (t, k) in key.iter_mut().enumerate() {
                *k = ea[i][t] + eb[j][t];
            }
            let slot = &mut out[index[key.as_slice()]];
            *slot = slot.checked_add(x.checked_mul(*y)?)?;
        }
    }
    Some(out)
}

/// `V_{k,n}(L̄)`: all `k`-fold products of members of `Ĥ⁰(X, nL̄)`, as
/// sections of `nkL̄`.
pub fn product_set(
    bundle: &HermitianLineBundle,
    n: u32,
    k: u32,
    budget: usize,
) -> Result<EffectiveSectionSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let base = enumerate_effective(bundle, n, budget)?;
    let kind = bundle.model().kind();
    let d = bundle.section_degree(n);
    let mut current: BTreeSet<Vec<i64>> = base.members.iter().cloned().collect();
    let mut work = 0usize;
    for j in 1..k as usize {
        let mut next = BTreeSet::new();
        for a in &current {
            for b in &base.members {
                work += 1;
                if work > budget {
                    return Err(Error::BudgetExhausted(format!(
                        "product set exceeded {budget} products"
                    )));
                }
                let p = multiply(kind, d * j, a, d, b)
                    .ok_or_else(|| Error::ScopeExceeded("coefficient overflow".into()))?;
                next.insert(p);
            }
        }
        current = next;
    }
    Ok(EffectiveSectionSet {
        bundle: bundle.clone(),
        m: n * k,
        rank: bundle.rank(n * k),
        members: current.into_iter().collect(),
        ambiguous_count: base.ambiguous_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_bundle, make_model, MetricSpec};
    use crate::numeric::{log_upper, rational};

    fn can(a: i64, c: num_rational::BigRational) -> HermitianLineBundle {
        make_bundle(make_model(ModelKind::P1Z), a, MetricSpec::canonical(c)).unwrap()
    }

    #[test]
    fn ranks() {
        assert_eq!(basis_rank(&can(1, rational(0, 1)), 5), 6);
        assert_eq!(basis_rank(&can(2, rational(0, 1)), 3), 7);
        let p2 = make_bundle(
            make_model(ModelKind::P2Z),
            1,
            MetricSpec::canonical(rational(0, 1)),
        )
        .unwrap();
        assert_eq!(basis_rank(&p2, 2), 6);
        assert_eq!(SectionLattice::new(&p2, 2).exponents.len(), 6);
    }

    #[test]
    fn monomials_only_at_c_zero() {
        let b = can(1, rational(0, 1));
        let set = enumerate_effective(&b, 2, 1_000_000).unwrap();
        assert_eq!(set.len(), 7);
        assert_eq!(set.ambiguous_count, 0);
        assert!(set.contains(&[0, -1, 0]));
        assert!((hzero_exact(&b, 5).unwrap() - 13f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn cross_polytope_instance() {
        let b = can(1, log_upper(2));
        let set = enumerate_effective(&b, 1, 1_000_000).unwrap();
        assert_eq!(set.len(), 13);
        assert!(set.members.iter().all(|s| s[0].abs() + s[1].abs() <= 2));
        let (lo, hi) = hzero_band(&b, 1);
        assert_eq!(lo, hi);
        assert!(lo >= 13f64.ln() - 1e-15);
    }

    #[test]
    fn budget_and_scope() {
        let b = can(1, rational(0, 1));
        assert!(matches!(
            enumerate_effective(&b, 1, 0),
            Err(Error::BudgetExhausted(_))
        ));
        assert!(matches!(
            enumerate_effective(&b, 40, 10),
            Err(Error::ScopeExceeded(_))
        ));
        let big = can(1, rational(5, 1));
        assert!(matches!(
            enumerate_effective(&big, 1, 10),
            Err(Error::ScopeExceeded(_))
        ));
        assert!(matches!(
            enumerate_effective(&can(1, rational(3, 1)), 1, 3),
            Err(Error::BudgetExhausted(_))
        ));
    }

    #[test]
    fn below_one_only_zero() {
        let b = can(1, rational(-1, 10));
        let set = enumerate_effective(&b, 3, 1_000_000).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(hzero_exact(&b, 3).unwrap(), 0.0);
    }

    #[test]
    fn products() {
        let b = can(1, rational(0, 1));
        let v = product_set(&b, 1, 2, 1_000_000).unwrap();
        assert_eq!(
            v.members,
            enumerate_effective(&b, 2, 1_000_000).unwrap().members
        );
        let v1 = product_set(&b, 1, 1, 1_000_000).unwrap();
        assert_eq!(
            v1.members,
            enumerate_effective(&b, 1, 1_000_000).unwrap().members
        );
        assert_eq!(
            multiply(ModelKind::P1Z, 1, &[1, 1], 1, &[1, -1]),
            Some(vec![1, 0, -1])
        );
        // (1 + t1)(t2) on P2: basis [1, t2, t1] then [1, t2, t2², t1, t1t2, t1²]
        assert_eq!(
            multiply(ModelKind::P2Z, 1, &[1, 0, 1], 1, &[0, 1, 0]),
            Some(vec![0, 1, 0, 0, 1, 0])
        );
    }

    #[test]
    fn twisted_enumeration() {
        let b = can(1, log_upper(2))
            .twist(&rational(0, 1), &[(2, 1)])
            .unwrap();
        let set = enumerate_effective(&b, 1, 1_000_000).unwrap();
        assert_eq!(set.len(), 5);
        assert!(set.contains(&[2, 0]) && set.contains(&[0, -2]));
    }
}
