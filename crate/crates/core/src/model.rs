//! Arithmetic models (`P1_Z`, `P2_Z`) and the hermitian line bundles on them.
//!
//! A bundle is `a·Ō(1)` with either the canonical (Weil) metric or the
//! Fubini–Study metric, twisted by a rational constant `c` and by vertical
//! fibres.  A section of `mL̄` is an integer coefficient vector in the monomial
//! basis of `H⁰(O(a·m))`; its norm at a point is
//!
//! ```text
//! canonical:      |f(t)| / max(1, |t_1|, .., |t_n|)^{am} · e^{-mc}
//! Fubini–Study:   |f(t)| / (1 + |t|²)^{am/2}            · e^{-mc}
//! ```
//!
//! A vertical twist `(p, k)` with `k > 0` stands for `L̄(−k·X_p)`: at power `m`
//! the effective sections are exactly the integer vectors divisible by
//! `p^{mk}` whose norm is at most one.  Since `Ō(X_p) ≅ Ō(log p)`, the twist
//! lowers the effective scaling constant by `k·log p`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::numeric::{is_prime, ratio_to_f64, Threshold};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "p1z")]
    P1Z,
    #[serde(rename = "p2z")]
    P2Z,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::P1Z => "p1z",
            ModelKind::P2Z => "p2z",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArithmeticModel {
    kind: ModelKind,
}

impl ArithmeticModel {
    pub fn new(kind: ModelKind) -> Self {
        ArithmeticModel { kind }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Absolute (arithmetic) dimension `d`.
    pub fn dimension(&self) -> usize {
        match self.kind {
            ModelKind::P1Z => 2,
            ModelKind::P2Z => 3,
        }
    }

    /// Number of connected components of `X` over `Q̄`.
    pub fn e0(&self) -> u32 {
        1
    }

    /// Rank of `H⁰(O(n))`.
    pub fn rank_for_degree(&self, n: usize) -> usize {
        match self.kind {
            ModelKind::P1Z => n + 1,
            ModelKind::P2Z => (n + 1) * (n + 2) / 2,
        }
    }

    /// Exponent vectors of the monomial basis of `H⁰(O(n))`, in basis order.
    ///
    /// `P1_Z`: `[j]` for `t^j`, `j = 0..=n`.  `P2_Z`: `[i, j]` for
    /// `t_1^i t_2^j`, `i + j <= n`, ordered by `i` then `j`.
    pub fn monomials(&self, n: usize) -> Vec<Vec<usize>> {
        match self.kind {
            ModelKind::P1Z => (0..=n).map(|j| vec![j]).collect(),
            ModelKind::P2Z => {
                let mut out = Vec::with_capacity(self.rank_for_degree(n));
                for i in 0..=n {
                    for j in 0..=(n - i) {
                        out.push(vec![i, j]);
                    }
                }
                out
            }
        }
    }
}

pub fn make_model(kind: ModelKind) -> ArithmeticModel {
    ArithmeticModel::new(kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricFamily {
    #[serde(rename = "canonical")]
    Canonical,
    #[serde(rename = "fubini-study")]
    FubiniStudy,
}

impl fmt::Display for MetricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricFamily::Canonical => "canonical",
            MetricFamily::FubiniStudy => "fubini-study",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricSpec {
    pub family: MetricFamily,
    /// Log-scale constant, in nats.
    pub c: BigRational,
}

impl MetricSpec {
    pub fn canonical(c: BigRational) -> Self {
        MetricSpec {
            family: MetricFamily::Canonical,
            c,
        }
    }

    pub fn fubini_study(c: BigRational) -> Self {
        MetricSpec {
            family: MetricFamily::FubiniStudy,
            c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermitianLineBundle {
    model: ArithmeticModel,
    degree: u32,
    metric: MetricSpec,
    /// prime -> multiplicity, zero entries never stored
    twists: BTreeMap<u64, i64>,
}

pub fn make_bundle(
    model: ArithmeticModel,
    a: i64,
    metric: MetricSpec,
) -> Result<HermitianLineBundle> {
    HermitianLineBundle::new(model, a, metric)
}

/// `L̄(alpha − V)`; see [`HermitianLineBundle::twist`].
pub fn twist(
    bundle: &HermitianLineBundle,
    alpha: &BigRational,
    v: &[(u64, i64)],
) -> Result<HermitianLineBundle> {
    bundle.twist(alpha, v)
}

/// Tensor product `L̄₁ ⊗ L̄₂`; see [`HermitianLineBundle::add`].
pub fn add_bundles(
    b1: &HermitianLineBundle,
    b2: &HermitianLineBundle,
) -> Result<HermitianLineBundle> {
    b1.add(b2)
}

impl HermitianLineBundle {
    pub fn new(model: ArithmeticModel, a: i64, metric: MetricSpec) -> Result<Self> {
        if a < 0 {
            return Err(Error::NegativeDegree(a));
        }
        if metric.family == MetricFamily::FubiniStudy && model.kind() != ModelKind::P1Z {
            return Err(Error::UnsupportedCombination(format!(
                "Fubini-Study metric on {}",
                model.kind()
            )));
        }
        let degree = u32::try_from(a)
            .map_err(|_| Error::InvalidArgument(format!("degree {a} too large")))?;
        Ok(HermitianLineBundle {
            model,
            degree,
            metric,
            twists: BTreeMap::new(),
        })
    }

    pub fn model(&self) -> ArithmeticModel {
        self.model
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn family(&self) -> MetricFamily {
        self.metric.family
    }

    pub fn c(&self) -> &BigRational {
        &self.metric.c
    }

    pub fn twists(&self) -> &BTreeMap<u64, i64> {
        &self.twists
    }

    /// `L̄(alpha − V)` in the notation of the module docs: `c += alpha` and the
    /// vertical multiplicities in `v` are merged in.
    pub fn twist(&self, alpha: &BigRational, v: &[(u64, i64)]) -> Result<Self> {
        let mut out = self.clone();
        out.metric.c = &out.metric.c + alpha;
        for &(p, k) in v {
            if !is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            let entry = out.twists.entry(p).or_insert(0);
            *entry += k;
        }
        out.twists.retain(|_, k| *k != 0);
        if let Some((&p, &k)) = out.twists.iter().find(|(_, &k)| k < 0) {
            return Err(Error::NegativeTwist { p, k });
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::ModelMismatch(format!(
                "{} vs {}",
                self.model.kind(),
                other.model.kind()
            )));
        }
        if self.metric.family != other.metric.family {
            return Err(Error::ModelMismatch(format!(
                "{} vs {}",
                self.metric.family, other.metric.family
            )));
        }
        let mut out = self.clone();
        out.degree += other.degree;
        out.metric.c = &self.metric.c + &other.metric.c;
        for (&p, &k) in &other.twists {
            *out.twists.entry(p).or_insert(0) += k;
        }
        out.twists.retain(|_, k| *k != 0);
        Ok(out)
    }

    /// `m·L̄` as a bundle in its own right.
    pub fn scale(&self, m: u32) -> Self {
        let mut out = self.clone();
        out.degree = self.degree * m;
        out.metric.c = &self.metric.c * BigRational::from_integer(BigInt::from(m));
        for k in out.twists.values_mut() {
            *k *= m as i64;
        }
        out.twists.retain(|_, k| *k != 0);
        out
    }

    /// Degree of the sections of `mL̄`.
    pub fn section_degree(&self, m: u32) -> usize {
        self.degree as usize * m as usize
    }

    pub fn rank(&self, m: u32) -> usize {
        self.model.rank_for_degree(self.section_degree(m))
    }

    /// `m·c` as an exact rational.
    pub fn mc(&self, m: u32) -> BigRational {
        &self.metric.c * BigRational::from_integer(BigInt::from(m))
    }

    /// Divisibility imposed on sections of `mL̄`: `(p, m·k)` for each twist.
    pub fn divisibility(&self, m: u32) -> Vec<(u64, u64)> {
        self.twists
            .iter()
            .map(|(&p, &k)| (p, (k as u64) * m as u64))
            .collect()
    }

    /// The divisor `N = prod p^{mk}` as a big integer.
    pub fn divisor(&self, m: u32) -> BigInt {
        let mut n = BigInt::from(1);
        for (p, e) in self.divisibility(m) {
            n *= num_traits::pow(BigInt::from(p), e as usize);
        }
        n
    }

    /// Threshold `e^{mc}` for the untwisted norm of a section of `mL̄`.
    pub fn norm_threshold(&self, m: u32) -> Threshold {
        Threshold::new(self.mc(m))
    }

    /// Threshold `e^{mc}/N` for the quotient `s/N` of an effective section.
    pub fn reduced_threshold(&self, m: u32) -> Threshold {
        self.divisibility(m)
            .into_iter()
            .fold(self.norm_threshold(m), |t, (p, e)| t.divide_by(p, e))
    }

    /// `c − Σ k·log p`, the constant of the isometric bundle without twists.
    pub fn effective_c(&self) -> f64 {
        ratio_to_f64(&self.metric.c)
            - self
                .twists
                .iter()
                .map(|(&p, &k)| k as f64 * (p as f64).ln())
                .sum::<f64>()
    }

    pub fn is_untwisted(&self) -> bool {
        self.twists.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct BundleWire {
    model: ModelKind,
    degree: i64,
    family: MetricFamily,
    c_num: i64,
    c_den: i64,
    twists: Vec<[i64; 2]>,
}

impl Serialize for HermitianLineBundle {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let c_num = self
            .metric
            .c
            .numer()
            .to_i64()
            .ok_or_else(|| S::Error::custom("c numerator exceeds i64"))?;
        let c_den = self
            .metric
            .c
            .denom()
            .to_i64()
            .ok_or_else(|| S::Error::custom("c denominator exceeds i64"))?;
        BundleWire {
            model: self.model.kind(),
            degree: self.degree as i64,
            family: self.metric.family,
            c_num,
            c_den,
            twists: self.twists.iter().map(|(&p, &k)| [p as i64, k]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermitianLineBundle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = BundleWire::deserialize(deserializer)?;
        if w.c_den == 0 {
            return Err(D::Error::custom("c_den must be nonzero"));
        }
        let c = BigRational::new(BigInt::from(w.c_num), BigInt::from(w.c_den));
        let metric = MetricSpec {
            family: w.family,
            c,
        };
        let b = HermitianLineBundle::new(ArithmeticModel::new(w.model), w.degree, metric)
            .map_err(D::Error::custom)?;
        let mut v = Vec::with_capacity(w.twists.len());
        for [p, k] in w.twists {
            if p < 2 {
                return Err(D::Error::custom(format!("invalid twist prime {p}")));
            }
            v.push((p as u64, k));
        }
        b.twist(&BigRational::zero(), &v).map_err(D::Error::custom)
    }
}

impl fmt::Display for HermitianLineBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}·O(1)[{}, c={}]",
            self.model.kind(),
            self.degree,
            self.metric.family,
            self.metric.c
        )?;
        for (p, k) in &self.twists {
            write!(f, "(-{}·X_{})", k, p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational;

    fn p1() -> ArithmeticModel {
        make_model(ModelKind::P1Z)
    }

    fn can(a: i64, c: i64) -> HermitianLineBundle {
        make_bundle(p1(), a, MetricSpec::canonical(rational(c, 1))).unwrap()
    }

    #[test]
    fn model_dimensions() {
        assert_eq!(make_model(ModelKind::P1Z).dimension(), 2);
        assert_eq!(make_model(ModelKind::P2Z).dimension(), 3);
        assert_eq!(make_model(ModelKind::P1Z).e0(), 1);
        assert_eq!(make_model(ModelKind::P2Z).rank_for_degree(2), 6);
        assert_eq!(
            make_model(ModelKind::P2Z).monomials(1),
            vec![vec![0, 0], vec![0, 1], vec![1, 0]]
        );
    }

    #[test]
    fn bundle_construction_errors() {
        let p2 = make_model(ModelKind::P2Z);
        assert!(matches!(
            make_bundle(p2, 1, MetricSpec::fubini_study(rational(0, 1))),
            Err(Error::UnsupportedCombination(_))
        ));
        assert_eq!(
            make_bundle(p1(), -1, MetricSpec::canonical(rational(0, 1))),
            Err(Error::NegativeDegree(-1))
        );
        let b = can(1, 0);
        assert!(b.twists().is_empty());
    }

    #[test]
    fn twist_and_add() {
        let b = can(1, 1);
        let alpha = rational(693147, 1000000);
        let t = b.twist(&alpha, &[]).unwrap();
        assert_eq!(t.c(), &(rational(1, 1) + &alpha));
        let back = t.twist(&-alpha.clone(), &[]).unwrap();
        assert_eq!(back, b);

        let v = b.twist(&rational(0, 1), &[(5, 1)]).unwrap();
        assert_eq!(v.divisibility(3), vec![(5, 3)]);
        assert_eq!(v.twist(&rational(0, 1), &[(5, -1)]).unwrap(), b);
        assert!(matches!(
            b.twist(&rational(0, 1), &[(5, -1)]),
            Err(Error::NegativeTwist { .. })
        ));
        assert_eq!(b.twist(&rational(0, 1), &[(4, 1)]), Err(Error::NotPrime(4)));

        assert_eq!(can(1, 1).add(&can(1, 4)).unwrap(), can(2, 5));
        assert_eq!(b.add(&can(0, 0)).unwrap(), b);
        let fs = make_bundle(p1(), 1, MetricSpec::fubini_study(rational(0, 1))).unwrap();
        assert!(matches!(b.add(&fs), Err(Error::ModelMismatch(_))));
    }

    #[test]
    fn scale_matches_repeated_addition() {
        let b = can(1, 3).twist(&rational(1, 2), &[(3, 1)]).unwrap();
        let mut acc = b.clone();
        for _ in 1..4 {
            acc = acc.add(&b).unwrap();
        }
        assert_eq!(b.scale(4), acc);
    }

    #[test]
    fn json_field_order() {
        let b = can(2, 5).twist(&rational(0, 1), &[(7, 2)]).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(
            s,
            r#"{"model":"p1z","degree":2,"family":"canonical","c_num":5,"c_den":1,"twists":[[7,2]]}"#
        );
        let back: HermitianLineBundle = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }
}
