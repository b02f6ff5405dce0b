//! Desk-scale verification runs: Okounkov-body volumes against the
//! arithmetic volume as `p` grows, the rescaling and reduction estimates,
//! the compatibility identity for `ν`, finite Fujita tables, log-concavity,
//! and seeded inequality sweeps.  Reports serialize deterministically.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::intersect::{
    comparison_constant, corollary_checks, intersection_exact, is_ample, volume_closed_form,
    CorollaryReport,
};
use crate::model::{ArithmeticModel, HermitianLineBundle, MetricSpec, ModelKind};
use crate::norms::norm_body_bounds;
use crate::numeric::{factorize, fmt_sig12, log_upper, ratio_to_f64, rational};
use crate::okounkov::{
    approx_from_images, brunn_minkowski_check, check_schedule, convex_hull, root_sum_holds,
    scale_points, BrunnMinkowskiReport, OkounkovApprox, Point, RationalPolytope,
};
use crate::sections::{
    enumerate_effective, enumerate_scaled, hzero_band_with, product_set, EffectiveSectionSet,
    DEFAULT_BOX_LIMIT, DEFAULT_NODE_BUDGET,
};
use crate::valuation::{
    image_of_set, nu_bounds, nu_small, valuation_image_exact, valuation_image_lattice, Flag,
    FlagPoint, ValuationImage,
};
use crate::{Error, Result};

/// A real parameter: an exact rational, or `log n` (taken as the rational
/// upper approximation from [`log_upper`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Rational { num: i64, den: i64 },
    Log { log: u64 },
}

impl Scalar {
    pub fn value(&self) -> Result<BigRational> {
        match *self {
            Scalar::Rational { num, den } => {
                if den == 0 {
                    return Err(Error::InvalidArgument("zero denominator".into()));
                }
                Ok(rational(num, den))
            }
            Scalar::Log { log } => {
                if log == 0 {
                    return Err(Error::InvalidArgument("log of zero".into()));
                }
                Ok(log_upper(log))
            }
        }
    }
}

fn default_budget() -> usize {
    1_000_000
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_slack() -> f64 {
    2.0
}

fn default_epsilon() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub bundle: HermitianLineBundle,
    /// Second bundle for log-concavity runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle2: Option<HermitianLineBundle>,
    pub primes: Vec<u64>,
    /// Flag point for every prime; coordinates are reduced mod `p`.  Defaults
    /// to `t = 0` on `P1` and the line `t1 = 0` with the point `t1 = t2 = 0`
    /// on `P2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<FlagPoint>,
    pub m_schedule: Vec<u32>,
    /// Search nodes per candidate point.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    /// Envelope multiplier for the comparison-constant gate.
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// `ε` as a fraction of the target volume.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alphas: Vec<Scalar>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_list: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check_schedule(&self.m_schedule)?;
        if self.budget == 0 {
            return Err(Error::InvalidArgument("budget must be positive".into()));
        }
        if !(self.tolerance > 0.0) || !(self.slack > 0.0) || !(self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument(
                "tolerance, slack and epsilon must be positive".into(),
            ));
        }
        if self.primes.is_empty() {
            return Err(Error::InvalidArgument("no primes".into()));
        }
        for &p in &self.primes {
            self.flag_for(p)?;
        }
        for a in &self.alphas {
            a.value()?;
        }
        Ok(())
    }

    pub fn flag_for(&self, p: u64) -> Result<Flag> {
        let kind = self.bundle.model().kind();
        let point = match (&self.flag, kind) {
            (Some(FlagPoint::Affine { alpha }), _) => FlagPoint::Affine {
                alpha: alpha % p.max(1),
            },
            (Some(FlagPoint::Plane { line, point }), _) => FlagPoint::Plane {
                line: line.map(|c| c % p.max(1)),
                point: point.map(|c| c % p.max(1)),
            },
            (Some(other), _) => other.clone(),
            (None, ModelKind::P1Z) => FlagPoint::Affine { alpha: 0 },
            (None, ModelKind::P2Z) => FlagPoint::Plane {
                line: [0, 1, 0],
                point: [1, 0, 0],
            },
        };
        Flag::new(kind, p, point)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremARow {
    pub p: u64,
    pub m: u32,
    pub verified_count: usize,
    pub unknown_count: usize,
    pub hull_volume: String,
    pub hull_volume_times_logp: f64,
    pub target: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremASummary {
    /// Gaps nonincreasing along the schedule for every prime.
    pub monotone_trend: bool,
    pub final_p: u64,
    pub final_m: u32,
    pub final_gap: f64,
    pub comparison_constant: f64,
    /// `slack · c(L̄) / log p` at the final prime.
    pub envelope: f64,
    pub gap_within_envelope: bool,
    /// `|#v(mL̄)·log p/m^d − mid ĥ⁰-band/m^d|` at the final `(p, m)`.
    pub count_deviation: f64,
    pub hzero_band: (f64, f64),
    pub count_within_envelope: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremAReport {
    pub bundle: HermitianLineBundle,
    pub rows: Vec<TheoremARow>,
    pub summary: TheoremASummary,
    /// Hull of the final `m` for each prime.
    #[serde(skip)]
    pub hulls: Vec<(u64, OkounkovApprox)>,
}

pub const THEOREM_A_HEADER: &str =
    "p,m,verified_count,hull_volume,hull_volume_times_logp,target,gap";

impl TheoremAReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(THEOREM_A_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.p,
                r.m,
                r.verified_count,
                r.hull_volume,
                fmt_sig12(r.hull_volume_times_logp),
                fmt_sig12(r.target),
                fmt_sig12(r.gap)
            );
        }
        out
    }

    /// Recomputes the derived columns from the raw ones.
    pub fn check_consistency(&self) -> Result<()> {
        for r in &self.rows {
            let v: BigRational = r.hull_volume.parse().map_err(|_| {
                Error::InvalidArgument(format!("bad hull volume {}", r.hull_volume))
            })?;
            let times = ratio_to_f64(&v) * (r.p as f64).ln();
            let gap = (times - r.target).abs();
            if (times - r.hull_volume_times_logp).abs() > 1e-12 * times.abs().max(1.0)
                || (gap - r.gap).abs() > 1e-12 * gap.max(1.0)
            {
                return Err(Error::InvalidArgument(format!(
                    "row p={} m={} is inconsistent",
                    r.p, r.m
                )));
            }
        }
        Ok(())
    }
}

/// The exact discretization for the witnessed family: `|⌊mc/log p⌋/m·log p − c|`
/// for canonical `c`, degree 1, flag at `t = 0`.
pub fn theorem_a_row_oracle(c: f64, p: u64, m: u32) -> f64 {
    let lp = (p as f64).ln();
    let x = (m as f64 * c / lp + 1e-12).floor();
    (x / m as f64 * lp - c).abs()
}

pub fn run_theorem_a(config: &ExperimentConfig) -> Result<TheoremAReport> {
    config.validate()?;
    let bundle = &config.bundle;
    if !is_ample(bundle) {
        return Err(Error::NotAmpleInCatalog(bundle.to_string()));
    }
    let d = bundle.model().dimension();
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    let target = volume_closed_form(bundle)? / fact;
    let tasks: Vec<(u64, u32)> = config
        .primes
        .iter()
        .flat_map(|&p| config.m_schedule.iter().map(move |&m| (p, m)))
        .collect();
    let run = |&(p, m): &(u64, u32)| -> Result<(ValuationImage, OkounkovApprox)> {
        let flag = config.flag_for(p)?;
        let img = valuation_image_lattice(bundle, m, &flag, config.budget)?;
        let approx = approx_from_images(bundle, &flag, &[m], std::slice::from_ref(&img));
        Ok((img, approx))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(ValuationImage, OkounkovApprox)>> = {
        use rayon::prelude::*;
        tasks.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(ValuationImage, OkounkovApprox)>> = tasks.iter().map(run).collect();
    let mut rows = Vec::new();
    let mut hulls = Vec::new();
    let mut last_image = None;
    for (&(p, m), res) in tasks.iter().zip(results) {
        let (img, approx) = res?;
        let lp = (p as f64).ln();
        let times = ratio_to_f64(approx.polytope.volume()) * lp;
        rows.push(TheoremARow {
            p,
            m,
            verified_count: img.verified.len(),
            unknown_count: img.unknown.len(),
            hull_volume: approx.polytope.volume().to_string(),
            hull_volume_times_logp: times,
            target,
            gap: (times - target).abs(),
        });
        if Some(&m) == config.m_schedule.last() {
            hulls.push((p, approx));
            last_image = Some(img);
        }
    }
    let monotone_trend = config.primes.iter().all(|&p| {
        let gaps: Vec<f64> = rows.iter().filter(|r| r.p == p).map(|r| r.gap).collect();
        gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    });
    let final_row = rows.last().expect("at least one row").clone();
    let reference = bundle;
    let cl = comparison_constant(bundle, reference)?;
    let lp = (final_row.p as f64).ln();
    let envelope = config.slack * cl / lp;
    let m = final_row.m;
    let md = (m as f64).powi(d as i32);
    let band = hzero_band_for(bundle, m);
    let count = last_image.map_or(0, |i| i.verified.len());
    let count_deviation = (count as f64 * lp / md - 0.5 * (band.0 + band.1) / md).abs();
    let summary = TheoremASummary {
        monotone_trend,
        final_p: final_row.p,
        final_m: m,
        final_gap: final_row.gap,
        comparison_constant: cl,
        envelope,
        gap_within_envelope: final_row.gap <= envelope,
        count_deviation,
        hzero_band: band,
        count_within_envelope: count_deviation <= envelope,
    };
    let report = TheoremAReport {
        bundle: bundle.clone(),
        rows,
        summary,
        hulls,
    };
    report.check_consistency()?;
    Ok(report)
}

/// `ĥ⁰(mL̄)` enclosure; lattice-point bounds only once enumeration is
/// clearly out of reach.
fn hzero_band_for(bundle: &HermitianLineBundle, m: u32) -> (f64, f64) {
    if bundle.rank(m) > 12 {
        let nb = norm_body_bounds(bundle, m);
        return (nb.inner_log_count, nb.outer_log_count);
    }
    hzero_band_with(bundle, m, 10_000_000)
}

fn exact_set(bundle: &HermitianLineBundle) -> Result<EffectiveSectionSet> {
    let set = enumerate_effective(bundle, 1, DEFAULT_NODE_BUDGET)?;
    if set.ambiguous_count > 0 {
        return Err(Error::AmbiguousBoundary(set.ambiguous_count));
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescalingRow {
    pub alpha: String,
    pub count: usize,
    pub count_twisted: usize,
    /// `ĥ⁰(L̄) − ĥ⁰(L̄(−α))`
    pub difference: f64,
    /// `(α + log 3)·rank`
    pub bound: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescalingReport {
    pub bundle: HermitianLineBundle,
    pub m: u32,
    pub rank: usize,
    pub rows: Vec<RescalingRow>,
}

impl RescalingReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.lower_holds && r.upper_holds)
    }
}

/// `0 ≤ ĥ⁰(M̄) − ĥ⁰(M̄(−α)) ≤ (α + log 3)·rank H⁰(M)` for `M̄ = mL̄`.
pub fn verify_rescaling(
    bundle: &HermitianLineBundle,
    m: u32,
    alphas: &[BigRational],
) -> Result<RescalingReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let level = bundle.scale(m);
    let rank = level.rank(1);
    let base = exact_set(&level)?.len();
    let mut rows = Vec::new();
    for alpha in alphas {
        if alpha.is_negative() {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha} must be nonnegative"
            )));
        }
        let twisted = exact_set(&level.twist(&-alpha.clone(), &[])?)?.len();
        let difference = (base as f64).ln() - (twisted as f64).ln();
        let bound = (ratio_to_f64(alpha) + 3f64.ln()) * rank as f64;
        rows.push(RescalingRow {
            alpha: alpha.to_string(),
            count: base,
            count_twisted: twisted,
            difference,
            bound,
            lower_holds: twisted <= base,
            upper_holds: difference <= bound * (1.0 + 1e-12),
        });
    }
    Ok(RescalingReport {
        bundle: bundle.clone(),
        m,
        rank,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub bundle: HermitianLineBundle,
    pub m: u32,
    pub n: u64,
    /// `#Ĥ⁰(M̄)`
    pub count: usize,
    /// `#Ĥ⁰(M̄(log 2))`
    pub count_plus_log2: usize,
    /// `#Ĥ⁰(M̄(−Z_n))`
    pub count_minus_z: usize,
    /// `#Ĥ⁰(M̄(log 2 − Z_n))`
    pub count_plus_log2_minus_z: usize,
    /// `# r_n(Ĥ⁰(M̄))`, residues of coefficient vectors mod `n`
    pub reduction_count: usize,
    pub upper_holds: bool,
    pub lower_holds: bool,
}

impl ReductionReport {
    pub fn holds(&self) -> bool {
        self.upper_holds && self.lower_holds
    }
}

/// `ĥ⁰(M̄) − ĥ⁰(M̄(log 2 − Z)) ≤ log #r(Ĥ⁰(M̄)) ≤ ĥ⁰(M̄(log 2)) − ĥ⁰(M̄(−Z))`
/// with `Z = div(n)`, `M̄ = mL̄`, checked as integer inequalities.
pub fn verify_reduction(bundle: &HermitianLineBundle, m: u32, n: u64) -> Result<ReductionReport> {
    if m == 0 || n < 2 {
        return Err(Error::InvalidArgument("need m >= 1 and n >= 2".into()));
    }
    let level = bundle.scale(m);
    let z: Vec<(u64, i64)> = factorize(n)
        .into_iter()
        .map(|(p, e)| (p, e as i64))
        .collect();
    let base = exact_set(&level)?;
    // the log 2 twist doubles the threshold exactly
    let two = rational(2, 1);
    let one = rational(1, 1);
    let count_with = |factor: &BigRational, twist: &[(u64, i64)]| -> Result<usize> {
        let set = enumerate_scaled(
            &level.twist(&BigRational::zero(), twist)?,
            1,
            factor,
            DEFAULT_NODE_BUDGET,
            DEFAULT_BOX_LIMIT,
        )?;
        if set.ambiguous_count > 0 {
            return Err(Error::AmbiguousBoundary(set.ambiguous_count));
        }
        Ok(set.len())
    };
    let plus_log2 = count_with(&two, &[])?;
    let plus_log2_minus_z = count_with(&two, &z)?;
    let minus_z = count_with(&one, &z)?;
    let nn = n as i64;
    let residues: BTreeSet<Vec<i64>> = base
        .members
        .iter()
        .map(|s| s.iter().map(|a| a.rem_euclid(nn)).collect())
        .collect();
    let r = residues.len();
    let count = base.len();
    Ok(ReductionReport {
        bundle: bundle.clone(),
        m,
        n,
        count,
        count_plus_log2: plus_log2,
        count_minus_z: minus_z,
        count_plus_log2_minus_z: plus_log2_minus_z,
        reduction_count: r,
        upper_holds: r * minus_z <= plus_log2,
        lower_holds: count <= r * plus_log2_minus_z,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub bundle: HermitianLineBundle,
    pub m: u32,
    pub p: u64,
    /// `#v(mL̄)`
    pub lhs: usize,
    /// `#ν°` of fiber restrictions of `Ĥ⁰(mL̄(−kY₁))`, `k = 0, 1, …`
    pub terms: Vec<usize>,
    pub rhs: usize,
    pub holds: bool,
}

/// `#v(M̄) = Σ_k #ν°(Ĥ⁰(M̄(−kY₁))|_{Y₁})`, `M̄ = mL̄`, with the right side
/// computed from separate enumerations of the twisted bundles.
pub fn verify_compatibility(
    bundle: &HermitianLineBundle,
    m: u32,
    flag: &Flag,
) -> Result<CompatibilityReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let level = bundle.scale(m);
    let lhs = valuation_image_exact(&level, 1, flag)?.verified.len();
    let p = flag.p();
    let coords = flag.coords(level.section_degree(1));
    let kmax = nu_bounds(flag, &level, 1)[0];
    let mut terms = Vec::new();
    let pk = BigInt::from(p);
    let mut k = 0i64;
    while k <= kmax.max(0) {
        let twisted = level.twist(&BigRational::zero(), &[(p, k)])?;
        let set = exact_set(&twisted)?;
        let scale = num_traits::pow(pk.clone(), k as usize);
        let scale =
            i64::try_from(scale).map_err(|_| Error::ScopeExceeded("p^k exceeds i64".into()))?;
        let mut residual: BTreeSet<Vec<i64>> = BTreeSet::new();
        for s in set.nonzero() {
            let reduced: Vec<i64> = s.iter().map(|a| (a / scale).rem_euclid(p as i64)).collect();
            if reduced.iter().any(|&a| a != 0) {
                let nu = nu_small(&coords, &reduced)?;
                residual.insert(nu[1..].to_vec());
            }
        }
        terms.push(residual.len());
        k += 1;
    }
    let rhs = terms.iter().sum();
    Ok(CompatibilityReport {
        bundle: bundle.clone(),
        m,
        p,
        lhs,
        terms,
        rhs,
        holds: lhs == rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FujitaRow {
    pub n: u32,
    pub k: u32,
    /// `#v(V_{k,n})`
    pub count: usize,
    /// `#v(V_{k,n}) / (nk)^d`
    pub ratio: f64,
    /// `#v(nkL̄)` when the lattice method decides every point.
    pub full_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FujitaReport {
    pub bundle: HermitianLineBundle,
    pub p: u64,
    pub rows: Vec<FujitaRow>,
    /// Hull volume of the Okounkov run at level `max n · k_max`.
    pub hull_volume: f64,
    pub epsilon: f64,
    /// For each `n`: whether the ratio is nondecreasing in `k`.
    pub nondecreasing: Vec<(u32, bool)>,
    /// `V_{k,n}` image never exceeds the full image.
    pub inclusion_holds: bool,
}

pub fn verify_fujita_finite(
    bundle: &HermitianLineBundle,
    flag: &Flag,
    n_list: &[u32],
    k_max: u32,
    budget: usize,
    epsilon: f64,
) -> Result<FujitaReport> {
    if n_list.is_empty() || k_max == 0 || n_list.contains(&0) {
        return Err(Error::InvalidArgument(
            "need nonempty n list, n >= 1 and k_max >= 1".into(),
        ));
    }
    let d = bundle.model().dimension() as i32;
    let mut rows = Vec::new();
    let mut inclusion_holds = true;
    for &n in n_list {
        for k in 1..=k_max {
            let set = product_set(bundle, n, k, budget)?;
            let coords = flag.coords(set.bundle.section_degree(n * k));
            let image: BTreeSet<Vec<i64>> = set
                .nonzero()
                .map(|s| nu_small(&coords, s))
                .collect::<Result<_>>()?;
            let full = valuation_image_lattice(bundle, n * k, flag, budget)
                .ok()
                .filter(|i| i.unknown.is_empty())
                .map(|i| i.verified);
            if let Some(f) = &full {
                inclusion_holds &= image.is_subset(f);
            }
            let nk = (n * k) as f64;
            rows.push(FujitaRow {
                n,
                k,
                count: image.len(),
                ratio: image.len() as f64 / nk.powi(d),
                full_count: full.map(|f| f.len()),
            });
        }
    }
    let top = n_list.iter().max().copied().unwrap_or(1) * k_max;
    let run = valuation_image_lattice(bundle, top, flag, budget)?;
    let hull_volume = ratio_to_f64(convex_hull(&scale_points(&run), flag.dimension()).volume());
    let nondecreasing = n_list
        .iter()
        .map(|&n| {
            let r: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.ratio).collect();
            (n, r.windows(2).all(|w| w[1] >= w[0]))
        })
        .collect();
    Ok(FujitaReport {
        bundle: bundle.clone(),
        p: flag.p(),
        rows,
        hull_volume,
        epsilon: epsilon * hull_volume,
        nondecreasing,
        inclusion_holds,
    })
}

/// Image of `Ĥ⁰` at level `m`: exact enumeration when in scope, otherwise
/// the lattice method.
fn image_at(
    bundle: &HermitianLineBundle,
    m: u32,
    flag: &Flag,
    budget: usize,
) -> Result<ValuationImage> {
    match enumerate_effective(bundle, m, 20_000_000) {
        Ok(set) if set.ambiguous_count == 0 => Ok(ValuationImage {
            p: flag.p(),
            m,
            verified: image_of_set(flag, &set)?,
            unknown: BTreeSet::new(),
            bounds: nu_bounds(flag, bundle, m),
        }),
        _ => valuation_image_lattice(bundle, m, flag, budget),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormVolumes {
    pub vol1: f64,
    pub vol2: f64,
    pub vol_sum: f64,
    pub exact: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremBReport {
    pub bundle1: HermitianLineBundle,
    pub bundle2: HermitianLineBundle,
    pub p: u64,
    pub m: u32,
    pub pairs_checked: usize,
    pub inclusion_violations: usize,
    /// Sums landing on points the lattice method left undecided.
    pub inclusion_undecided: usize,
    pub brunn_minkowski: BrunnMinkowskiReport,
    pub closed_form: Option<ClosedFormVolumes>,
}

impl TheoremBReport {
    pub fn holds(&self) -> bool {
        self.inclusion_violations == 0
            && self.brunn_minkowski.holds
            && self.closed_form.as_ref().is_none_or(|c| c.holds)
    }
}

/// `vol(L̄₁+L̄₂)^{1/d} ≥ vol(L̄₁)^{1/d} + vol(L̄₂)^{1/d}` from closed forms,
/// exactly when the volumes are rational.
pub fn theorem_b_closed_form(
    b1: &HermitianLineBundle,
    b2: &HermitianLineBundle,
) -> Result<ClosedFormVolumes> {
    let sum = b1.add(b2)?;
    let d = b1.model().dimension();
    let exact_vol = |b: &HermitianLineBundle| intersection_exact(&vec![b; d]);
    if let (Some(v1), Some(v2), Some(v12)) = (exact_vol(b1), exact_vol(b2), exact_vol(&sum)) {
        if is_ample(b1) && is_ample(b2) {
            return Ok(ClosedFormVolumes {
                vol1: ratio_to_f64(&v1),
                vol2: ratio_to_f64(&v2),
                vol_sum: ratio_to_f64(&v12),
                exact: true,
                holds: root_sum_holds(&v1, &v2, &v12, d),
            });
        }
    }
    let v1 = volume_closed_form(b1)?;
    let v2 = volume_closed_form(b2)?;
    let v12 = volume_closed_form(&sum)?;
    let r = 1.0 / d as f64;
    let lhs = v12.powf(r);
    let rhs = v1.powf(r) + v2.powf(r);
    Ok(ClosedFormVolumes {
        vol1: v1,
        vol2: v2,
        vol_sum: v12,
        exact: false,
        holds: lhs >= rhs - 1e-9 * lhs.max(1.0),
    })
}

pub fn run_theorem_b(
    b1: &HermitianLineBundle,
    b2: &HermitianLineBundle,
    flag: &Flag,
    m: u32,
    budget: usize,
) -> Result<TheoremBReport> {
    let sum = b1.add(b2)?;
    let i1 = image_at(b1, m, flag, budget)?;
    let i2 = image_at(b2, m, flag, budget)?;
    let i12 = image_at(&sum, m, flag, budget)?;
    let mut violations = 0;
    let mut undecided = 0;
    let mut pairs = 0;
    for a in &i1.verified {
        for b in &i2.verified {
            pairs += 1;
            let s: Vec<i64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            if !i12.verified.contains(&s) {
                if i12.unknown.contains(&s) {
                    undecided += 1;
                } else {
                    violations += 1;
                }
            }
        }
    }
    let dim = flag.dimension();
    let h1 = convex_hull(&scale_points(&i1), dim);
    let h2 = convex_hull(&scale_points(&i2), dim);
    let bm = brunn_minkowski_check(&h1, &h2)?;
    let closed_form = if is_ample(b1) && is_ample(b2) {
        Some(theorem_b_closed_form(b1, b2)?)
    } else {
        None
    };
    Ok(TheoremBReport {
        bundle1: b1.clone(),
        bundle2: b2.clone(),
        p: flag.p(),
        m,
        pairs_checked: pairs,
        inclusion_violations: violations,
        inclusion_undecided: undecided,
        brunn_minkowski: bm,
        closed_form,
    })
}

fn random_c(rng: &mut ChaCha8Rng) -> BigRational {
    rational(rng.gen_range(1..=40), rng.gen_range(1..=8))
}

/// Random ample-catalog bundle on the given model.
fn random_ample(rng: &mut ChaCha8Rng, kind: ModelKind) -> HermitianLineBundle {
    let a = rng.gen_range(1..=3);
    let model = ArithmeticModel::new(kind);
    let metric = if kind == ModelKind::P1Z && rng.gen_bool(0.3) {
        let c = if rng.gen_bool(0.2) {
            BigRational::zero()
        } else {
            random_c(rng)
        };
        MetricSpec::fubini_study(c)
    } else {
        MetricSpec::canonical(random_c(rng))
    };
    HermitianLineBundle::new(model, a, metric).expect("valid bundle")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub check: String,
    pub bundle1: HermitianLineBundle,
    pub bundle2: HermitianLineBundle,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySuiteReport {
    pub seed: u64,
    pub theorem_b_pairs: usize,
    pub corollary_pairs: usize,
    pub hodge_pairs: usize,
    pub polytope_pairs: usize,
    pub failures: Vec<SweepFailure>,
    /// Smallest slack seen for each check.
    pub min_slack: Vec<(String, f64)>,
}

impl InequalitySuiteReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

fn note_slack(min: &mut Vec<(String, f64)>, name: &str, slack: f64) {
    match min.iter_mut().find(|(n, _)| n == name) {
        Some((_, s)) => *s = s.min(slack),
        None => min.push((name.to_string(), slack)),
    }
}

fn random_polytope(rng: &mut ChaCha8Rng, dim: usize) -> RationalPolytope {
    let n = rng.gen_range(1..=8);
    let pts: Vec<Point> = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| rational(rng.gen_range(-12..=12), rng.gen_range(1..=4)))
                .collect()
        })
        .collect();
    convex_hull(&pts, dim)
}

/// Seeded sweeps of the theorem-backed inequalities: log-concavity of
/// closed-form volumes over canonical pairs, the corollary inequalities
/// over ample pairs, the Hodge-index sign over balanced pairs, and
/// Brunn–Minkowski over random rational polytopes.
pub fn run_inequality_suite(
    seed: u64,
    pairs: usize,
    hodge_pairs: usize,
    polytope_pairs: usize,
) -> Result<InequalitySuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut min_slack = Vec::new();
    for i in 0..pairs {
        let kind = if i % 4 == 3 {
            ModelKind::P2Z
        } else {
            ModelKind::P1Z
        };
        let model = ArithmeticModel::new(kind);
        let a1 = rng.gen_range(1..=3);
        let a2 = rng.gen_range(1..=3);
        let b1 = HermitianLineBundle::new(model, a1, MetricSpec::canonical(random_c(&mut rng)))?;
        let b2 = HermitianLineBundle::new(model, a2, MetricSpec::canonical(random_c(&mut rng)))?;
        let cf = theorem_b_closed_form(&b1, &b2)?;
        let d = model.dimension() as f64;
        let slack = cf.vol_sum.powf(1.0 / d) - cf.vol1.powf(1.0 / d) - cf.vol2.powf(1.0 / d);
        note_slack(&mut min_slack, "theorem-b", slack);
        if !cf.holds {
            failures.push(SweepFailure {
                check: "theorem-b".into(),
                bundle1: b1,
                bundle2: b2,
                slack,
            });
        }
    }
    for i in 0..pairs {
        let kind = if i % 4 == 3 {
            ModelKind::P2Z
        } else {
            ModelKind::P1Z
        };
        let b1 = random_ample(&mut rng, kind);
        let b2 = random_ample(&mut rng, kind);
        let rep: CorollaryReport = corollary_checks(&b1, &b2)?;
        for c in rep.checks.iter().filter(|c| c.name != "hodge-index") {
            note_slack(&mut min_slack, &c.name, c.slack);
            if !c.holds {
                failures.push(SweepFailure {
                    check: c.name.clone(),
                    bundle1: b1.clone(),
                    bundle2: b2.clone(),
                    slack: c.slack,
                });
            }
        }
    }
    for i in 0..hodge_pairs {
        let kind = if i % 3 == 2 {
            ModelKind::P2Z
        } else {
            ModelKind::P1Z
        };
        let b1 = random_ample(&mut rng, kind);
        let b2 = random_ample(&mut rng, kind);
        let rep = corollary_checks(&b1, &b2)?;
        let h = rep
            .checks
            .iter()
            .find(|c| c.name == "hodge-index")
            .expect("hodge check");
        note_slack(&mut min_slack, "hodge-index", h.slack);
        if !h.holds {
            failures.push(SweepFailure {
                check: "hodge-index".into(),
                bundle1: b1,
                bundle2: b2,
                slack: h.slack,
            });
        }
    }
    let dummy = HermitianLineBundle::new(
        ArithmeticModel::new(ModelKind::P1Z),
        0,
        MetricSpec::canonical(BigRational::zero()),
    )?;
    for i in 0..polytope_pairs {
        let dim = if i % 2 == 0 { 2 } else { 3 };
        let p = random_polytope(&mut rng, dim);
        let q = random_polytope(&mut rng, dim);
        let r = brunn_minkowski_check(&p, &q)?;
        note_slack(&mut min_slack, "brunn-minkowski", r.slack);
        if !r.holds {
            failures.push(SweepFailure {
                check: format!("brunn-minkowski #{i}"),
                bundle1: dummy.clone(),
                bundle2: dummy.clone(),
                slack: r.slack,
            });
        }
    }
    Ok(InequalitySuiteReport {
        seed,
        theorem_b_pairs: pairs,
        corollary_pairs: pairs,
        hodge_pairs,
        polytope_pairs,
        failures,
        min_slack,
    })
}

/// Brunn–Minkowski over every pair of hulls in a list.
pub fn brunn_minkowski_all_pairs(hulls: &[RationalPolytope]) -> Result<Vec<BrunnMinkowskiReport>> {
    let mut out = Vec::new();
    for (i, p) in hulls.iter().enumerate() {
        for q in &hulls[i..] {
            if p.dimension() == q.dimension() {
                out.push(brunn_minkowski_check(p, q)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_bundle, make_model};

    fn can(c: BigRational) -> HermitianLineBundle {
        make_bundle(make_model(ModelKind::P1Z), 1, MetricSpec::canonical(c)).unwrap()
    }

    fn config(c: BigRational, primes: &[u64], sched: &[u32]) -> ExperimentConfig {
        ExperimentConfig {
            bundle: can(c),
            bundle2: None,
            primes: primes.to_vec(),
            flag: None,
            m_schedule: sched.to_vec(),
            budget: 100_000,
            tolerance: 1e-9,
            seed: 7,
            slack: 2.0,
            epsilon: 0.05,
            alphas: vec![],
            n_list: vec![],
            k_max: None,
        }
    }

    #[test]
    fn theorem_a_small() {
        let rep = run_theorem_a(&config(rational(1, 1), &[7, 31, 101], &[20])).unwrap();
        let r7 = &rep.rows[0];
        assert_eq!(r7.hull_volume, "1/2");
        assert!((r7.gap - 0.02704492547235).abs() < 1e-9);
        for r in &rep.rows {
            assert!((r.gap - theorem_a_row_oracle(1.0, r.p, r.m)).abs() < 1e-12);
        }
        let chain = run_theorem_a(&config(rational(1, 1), &[7], &[5, 10, 20])).unwrap();
        assert!(chain.summary.monotone_trend);
        let v: Vec<BigRational> = chain
            .rows
            .iter()
            .map(|r| r.hull_volume.parse().unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert!(matches!(
            run_theorem_a(&config(rational(0, 1), &[7], &[5])),
            Err(Error::NotAmpleInCatalog(_))
        ));
        let csv = rep.to_csv();
        assert!(csv.starts_with(THEOREM_A_HEADER));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn rescaling_worked_instance() {
        let b = can(log_upper(2));
        let rep =
            verify_rescaling(&b, 1, &[log_upper(2), BigRational::zero(), rational(5, 1)]).unwrap();
        assert_eq!((rep.rows[0].count, rep.rows[0].count_twisted), (13, 5));
        assert!((rep.rows[0].bound - 2.0 * 6f64.ln()).abs() < 1e-9);
        assert_eq!(rep.rows[1].difference, 0.0);
        assert_eq!(rep.rows[2].count_twisted, 1);
        assert!(rep.holds());
    }

    #[test]
    fn reduction_worked_instance() {
        let rep = verify_reduction(&can(log_upper(2)), 1, 2).unwrap();
        assert_eq!(
            (
                rep.count,
                rep.count_plus_log2,
                rep.count_minus_z,
                rep.reduction_count
            ),
            (13, 41, 5, 4)
        );
        assert_eq!(rep.count_plus_log2_minus_z, 13);
        assert!(rep.holds());
        let huge = verify_reduction(&can(log_upper(2)), 1, 1009).unwrap();
        assert_eq!(huge.reduction_count, huge.count);
        assert!(huge.holds());
    }

    #[test]
    fn compatibility_worked_instance() {
        let f = Flag::p1(2, Some(0)).unwrap();
        let rep = verify_compatibility(&can(log_upper(2)), 1, &f).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (4, 4));
        assert_eq!(rep.terms, vec![2, 2]);
        let z = verify_compatibility(&can(BigRational::zero()), 3, &f).unwrap();
        assert_eq!((z.lhs, z.terms.clone()), (4, vec![4]));
        assert!(z.holds);
    }

    #[test]
    fn fujita_table_small() {
        let f = Flag::p1(2, Some(0)).unwrap();
        let rep = verify_fujita_finite(&can(log_upper(2)), &f, &[1], 3, 1_000_000, 0.05).unwrap();
        assert_eq!(rep.rows[0].count, rep.rows[0].full_count.unwrap());
        assert!(rep.inclusion_holds);
        assert!(rep
            .rows
            .iter()
            .all(|r| r.count <= r.full_count.unwrap_or(usize::MAX)));
    }

    #[test]
    fn theorem_b_pair() {
        let f = Flag::p1(2, Some(0)).unwrap();
        let rep =
            run_theorem_b(&can(rational(1, 1)), &can(rational(4, 1)), &f, 1, 100_000).unwrap();
        assert!(rep.holds());
        let cf = rep.closed_form.unwrap();
        assert!(cf.exact);
        assert_eq!((cf.vol1, cf.vol2, cf.vol_sum), (2.0, 8.0, 20.0));
    }

    #[test]
    fn suites_are_seeded() {
        let a = run_inequality_suite(3, 20, 10, 10).unwrap();
        let b = run_inequality_suite(3, 20, 10, 10).unwrap();
        assert!(a.holds());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn config_round_trip_and_validation() {
        let cfg = config(rational(1, 1), &[7, 31], &[5, 10]);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let bad = cfg.to_json().replace(
            "\"m_schedule\": [\n    5,\n    10\n  ]",
            "\"m_schedule\": []",
        );
        assert!(ExperimentConfig::from_json(&bad).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bundle": 1}"#).is_err());
        let alphas: Vec<Scalar> =
            serde_json::from_str(r#"[{"num": 1, "den": 2}, {"log": 2}]"#).unwrap();
        assert_eq!(alphas[1].value().unwrap(), log_upper(2));
    }
}
