//! Arithmetic intersection numbers of the supported hermitian line bundles,
//! closed-form volumes, the comparison constant `c(L̄)`, and the
//! intersection inequalities for pairs of ample bundles.
//!
//! Numbers are computed either from the closed forms, or by induction on
//! dimension: for a section `s` of the last bundle,
//! `L̄_1⋯L̄_d = (L̄_1⋯L̄_{d−1})|_{div s} − ∫ log‖s‖ c₁(L̄_1)∧⋯∧c₁(L̄_{d−1})`,
//! with heights of rational points in closed form and the archimedean
//! integral by Gauss–Legendre quadrature.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{ArithmeticModel, HermitianLineBundle, MetricFamily, ModelKind};
use crate::numeric::rational;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionForm {
    pub model: ArithmeticModel,
    pub method: Method,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionValue {
    pub value: f64,
    /// Bound on `|value − exact|`.
    pub error: f64,
    pub method: Method,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_LEVELS: usize = 14;

impl IntersectionForm {
    pub fn new(model: ArithmeticModel, method: Method, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        Ok(IntersectionForm {
            model,
            method,
            tolerance,
        })
    }

    pub fn evaluate(&self, bundles: &[&HermitianLineBundle]) -> Result<IntersectionValue> {
        let d = self.model.dimension();
        if bundles.len() != d {
            return Err(Error::DimensionMismatch(bundles.len(), d));
        }
        if let Some(b) = bundles.iter().find(|b| b.model() != self.model) {
            return Err(Error::ModelMismatch(format!(
                "{} on {}",
                b,
                self.model.kind()
            )));
        }
        match self.method {
            Method::ClosedForm => Ok(closed_form(self.model.kind(), bundles)),
            Method::Quadrature => quadrature(self.model.kind(), bundles, self.tolerance),
        }
    }
}

pub fn intersection_number(
    bundles: &[&HermitianLineBundle],
    method: Method,
) -> Result<IntersectionValue> {
    let model = bundles
        .first()
        .ok_or_else(|| Error::InvalidArgument("no bundles".into()))?
        .model();
    IntersectionForm::new(model, method, DEFAULT_TOLERANCE)?.evaluate(bundles)
}

/// `ĉ₁(L̄)` pairing of the reference metrics on `P1`:
/// `can·can = 0`, `FS·FS = 1/2`, `FS·can = (log 2)/2`.
fn cross_term(f: MetricFamily, g: MetricFamily) -> f64 {
    use MetricFamily::*;
    match (f, g) {
        (Canonical, Canonical) => 0.0,
        (FubiniStudy, FubiniStudy) => 0.5,
        _ => 0.5 * std::f64::consts::LN_2,
    }
}

fn closed_form(kind: ModelKind, b: &[&HermitianLineBundle]) -> IntersectionValue {
    let a: Vec<f64> = b.iter().map(|x| x.degree() as f64).collect();
    let c: Vec<f64> = b.iter().map(|x| x.effective_c()).collect();
    let terms: Vec<f64> = match kind {
        ModelKind::P1Z => vec![
            a[0] * a[1] * cross_term(b[0].family(), b[1].family()),
            a[0] * c[1],
            a[1] * c[0],
        ],
        ModelKind::P2Z => vec![a[1] * a[2] * c[0], a[0] * a[2] * c[1], a[0] * a[1] * c[2]],
    };
    let value: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>() + 1.0;
    IntersectionValue {
        value,
        error: 8.0 * f64::EPSILON * scale,
        method: Method::ClosedForm,
    }
}

/// Exact intersection number when it is rational: untwisted bundles and no
/// mixed families.
pub fn intersection_exact(bundles: &[&HermitianLineBundle]) -> Option<BigRational> {
    let kind = bundles.first()?.model().kind();
    if bundles.len() != bundles[0].model().dimension()
        || bundles
            .iter()
            .any(|b| !b.is_untwisted() || b.model().kind() != kind)
    {
        return None;
    }
    let a: Vec<BigRational> = bundles
        .iter()
        .map(|b| BigRational::from_integer(BigInt::from(b.degree())))
        .collect();
    let c: Vec<&BigRational> = bundles.iter().map(|b| b.c()).collect();
    match kind {
        ModelKind::P1Z => {
            let k = match (bundles[0].family(), bundles[1].family()) {
                (MetricFamily::Canonical, MetricFamily::Canonical) => BigRational::zero(),
                (MetricFamily::FubiniStudy, MetricFamily::FubiniStudy) => rational(1, 2),
                _ => return None,
            };
            Some(&a[0] * &a[1] * k + &a[0] * c[1] + &a[1] * c[0])
        }
        ModelKind::P2Z => Some(&a[1] * &a[2] * c[0] + &a[0] * &a[2] * c[1] + &a[0] * &a[1] * c[2]),
    }
}

/// `log ‖X_0‖(z_0 : z_1)` for the reference metric of a family on `O(1)`.
fn log_norm_x0(family: MetricFamily, z0: f64, z1: f64) -> f64 {
    let n = match family {
        MetricFamily::Canonical => z0.abs().max(z1.abs()),
        MetricFamily::FubiniStudy => z0.hypot(z1),
    };
    z0.abs().ln() - n.ln()
}

fn rule(n: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(n).expect("positive order"))
}

/// `∫_{P1(C)} log(|z| / N_g(1, z)) c₁(O(1), f)` at refinement `level`.
///
/// The curvature of the canonical metric is the uniform measure on `|z| = 1`;
/// for Fubini–Study it is `sin 2φ dφ dθ/2π` with `z = tan φ · e^{iθ}`.
fn archimedean_term(f: MetricFamily, g: MetricFamily, level: usize) -> f64 {
    let integrand = |r: f64| -> f64 {
        match g {
            MetricFamily::Canonical => r.ln() - r.max(1.0).ln(),
            MetricFamily::FubiniStudy => r.ln() - 0.5 * r.mul_add(r, 1.0).ln(),
        }
    };
    let nt = 4 + 2 * level;
    let theta = rule(nt);
    let tau = std::f64::consts::TAU;
    match f {
        MetricFamily::Canonical => {
            theta.integrate(0.0, tau, |t| {
                let (s, c) = t.sin_cos();
                integrand(c.hypot(s))
            }) / tau
        }
        MetricFamily::FubiniStudy => {
            // graded panels towards the logarithmic singularity at φ = 0,
            // with a breakpoint at |z| = 1
            let q = std::f64::consts::FRAC_PI_4;
            let mut cuts = vec![0.0];
            let k = 2 + 2 * level;
            for j in (0..k).rev() {
                cuts.push(q * 0.5f64.powi(j as i32));
            }
            cuts.push(2.0 * q);
            let radial = rule(6 + level);
            let mut acc = 0.0;
            for w in cuts.windows(2) {
                acc += radial.integrate(w[0], w[1], |phi| {
                    let r = phi.tan();
                    let ang = theta.integrate(0.0, tau, |t| {
                        // |z| does not depend on θ; keep the tensor form
                        let (s, c) = t.sin_cos();
                        integrand(r * c.hypot(s))
                    }) / tau;
                    ang * (2.0 * phi).sin()
                });
            }
            acc
        }
    }
}

/// Iterated archimedean term until successive levels agree to `tol/2`.
fn converged<F: Fn(usize) -> f64>(eval: F, tol: f64, what: &str) -> Result<(f64, f64)> {
    let mut prev = eval(0);
    for level in 1..MAX_LEVELS {
        let cur = eval(level);
        let diff = (cur - prev).abs();
        if diff < 0.5 * tol {
            return Ok((cur, diff.max(f64::EPSILON * cur.abs())));
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged(what.to_string()))
}

fn quadrature_p1(
    (a1, c1, f1): (f64, f64, MetricFamily),
    (a2, c2, f2): (f64, f64, MetricFamily),
    tol: f64,
) -> Result<(f64, f64)> {
    // s = X_1^{a2} ⊗ 1, divisor a2·[1 : 0]; the height of [1 : 0] uses the
    // section X_0^{a1}, which does not vanish there
    let height = a2 * (c1 - a1 * log_norm_x0(f1, 1.0, 0.0));
    let scale = (a1 * a2).abs().max(1.0);
    let (integral, err) = converged(
        |l| archimedean_term(f1, f2, l),
        tol / scale,
        "P1 archimedean term",
    )?;
    // log‖s‖ = a2 log(|z|/N(1, z)) − c2 on the chart X_0 = 1
    let value = height + a1 * c2 - a1 * a2 * integral;
    Ok((
        value,
        a1 * a2 * err + 8.0 * f64::EPSILON * (height.abs() + (a1 * c2).abs()),
    ))
}

/// `∫_{|z1|=|z2|=1} log(|z1| / max(1, |z1|, |z2|))` against the normalized
/// Haar measure, by tensor Gauss–Legendre.
fn torus_term(level: usize) -> f64 {
    let tau = std::f64::consts::TAU;
    let g = rule(4 + 2 * level);
    g.integrate(0.0, tau, |t1| {
        g.integrate(0.0, tau, |t2| {
            let z1 = t1.cos().hypot(t1.sin());
            let z2 = t2.cos().hypot(t2.sin());
            z1.ln() - z1.max(z2).max(1.0).ln()
        })
    }) / (tau * tau)
}

fn quadrature(kind: ModelKind, b: &[&HermitianLineBundle], tol: f64) -> Result<IntersectionValue> {
    let spec = |x: &HermitianLineBundle| (x.degree() as f64, x.effective_c(), x.family());
    let (value, error) = match kind {
        ModelKind::P1Z => quadrature_p1(spec(b[0]), spec(b[1]), tol)?,
        ModelKind::P2Z => {
            // s = X_1^{a3}: div s = a3·{X_1 = 0} ≅ P1, where the canonical
            // metrics restrict to canonical metrics with the same constants
            let (a3, c3, _) = spec(b[2]);
            let (a1, _, _) = spec(b[0]);
            let (a2, _, _) = spec(b[1]);
            let (restricted, e1) = quadrature_p1(spec(b[0]), spec(b[1]), tol)?;
            let (t, e2) = converged(
                torus_term,
                tol / (a1 * a2 * a3).abs().max(1.0),
                "torus term",
            )?;
            let value = a3 * restricted + a1 * a2 * (c3 - a3 * t);
            (
                value,
                a3 * e1 + a1 * a2 * a3 * e2 + 8.0 * f64::EPSILON * (a1 * a2 * c3).abs(),
            )
        }
    };
    Ok(IntersectionValue {
        value,
        error,
        method: Method::Quadrature,
    })
}

/// Whether the bundle lies in the declared ample catalog: degree at least 1
/// and canonical with `c > 0`, or Fubini–Study with `c >= 0` (constants
/// after folding vertical twists).
pub fn is_ample(b: &HermitianLineBundle) -> bool {
    if b.degree() == 0 {
        return false;
    }
    let c_positive = if b.is_untwisted() {
        b.c().is_positive()
    } else {
        b.effective_c() > 0.0
    };
    match b.family() {
        MetricFamily::Canonical => c_positive,
        MetricFamily::FubiniStudy => c_positive || (b.is_untwisted() && b.c().is_zero()),
    }
}

fn require_ample(b: &HermitianLineBundle) -> Result<()> {
    if is_ample(b) {
        Ok(())
    } else {
        Err(Error::NotAmpleInCatalog(b.to_string()))
    }
}

/// `vol(L̄) = L̄^d` for an ample bundle.
pub fn volume_closed_form(b: &HermitianLineBundle) -> Result<f64> {
    require_ample(b)?;
    let d = b.model().dimension();
    let list: Vec<&HermitianLineBundle> = vec![b; d];
    Ok(intersection_number(&list, Method::ClosedForm)?.value)
}

/// Geometric volume of the generic fiber: `a` on `P1`, `a²` on `P2`.
pub fn geometric_volume(b: &HermitianLineBundle) -> f64 {
    let a = b.degree() as f64;
    match b.model().kind() {
        ModelKind::P1Z => a,
        ModelKind::P2Z => a * a,
    }
}

/// `c(L̄) = 2 e₀ · vol(L_Q)/vol(A_Q) · (L̄·Ā^{d−1})/(d−1)!`.
pub fn comparison_constant(
    b: &HermitianLineBundle,
    reference: &HermitianLineBundle,
) -> Result<f64> {
    if b.model() != reference.model() {
        return Err(Error::ModelMismatch(format!("{b} vs {reference}")));
    }
    require_ample(reference)?;
    let d = b.model().dimension();
    let mut list = vec![b];
    list.extend(std::iter::repeat_n(reference, d - 1));
    let inter = intersection_number(&list, Method::ClosedForm)?.value;
    let fact: f64 = (1..d).map(|k| k as f64).product();
    let e0 = b.model().e0() as f64;
    Ok(2.0 * e0 * geometric_volume(b) / geometric_volume(reference) * inter / fact)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`, nonnegative when the inequality holds.
    pub slack: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = lhs - rhs;
        let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
        InequalityCheck {
            name: name.to_string(),
            lhs,
            rhs,
            slack,
            holds: slack >= -tol * scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub dimension: usize,
    /// `L̄₁^{d−j}·L̄₂^j` for `j = 0..=d`.
    pub mixed: Vec<f64>,
    pub checks: Vec<InequalityCheck>,
    /// `λ = Ā^{d−1}·B̄ / Ā^d` of the Hodge-index check.
    pub lambda: f64,
}

impl CorollaryReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

pub const INEQUALITY_TOLERANCE: f64 = 1e-9;

/// Mixed numbers `L̄₁^{d−j}·L̄₂^j`, `j = 0..=d`.
pub fn mixed_numbers(b1: &HermitianLineBundle, b2: &HermitianLineBundle) -> Result<Vec<f64>> {
    let d = b1.model().dimension();
    (0..=d)
        .map(|j| {
            let mut list: Vec<&HermitianLineBundle> = vec![b1; d - j];
            list.extend(std::iter::repeat_n(b2, j));
            Ok(intersection_number(&list, Method::ClosedForm)?.value)
        })
        .collect()
}

/// The Khovanskii–Teissier type inequalities for an ample pair, the volume
/// bound that follows, and the Hodge-index sign check with `Ā = b1`,
/// `B̄ = b2`.
pub fn corollary_checks(
    b1: &HermitianLineBundle,
    b2: &HermitianLineBundle,
) -> Result<CorollaryReport> {
    if b1.model() != b2.model() {
        return Err(Error::ModelMismatch(format!("{b1} vs {b2}")));
    }
    require_ample(b1)?;
    require_ample(b2)?;
    let d = b1.model().dimension();
    let df = d as f64;
    let i = mixed_numbers(b1, b2)?;
    let tol = INEQUALITY_TOLERANCE;
    let mut checks = vec![
        InequalityCheck::new(
            "first",
            i[1],
            i[0].powf((df - 1.0) / df) * i[d].powf(1.0 / df),
            tol,
        ),
        InequalityCheck::new("squared", i[1] * i[1], i[0] * i[2], tol),
        InequalityCheck::new(
            "volume-bound",
            i[1].powi(d as i32) / i[0].powi(d as i32 - 1),
            i[d],
            tol,
        ),
    ];
    // L̄ = B̄ − λĀ has Ā^{d−1}·L̄ = 0; then Ā^{d−2}·L̄² ≤ 0
    let lambda = i[1] / i[0];
    let hodge = i[2] - 2.0 * lambda * i[1] + lambda * lambda * i[0];
    checks.push(InequalityCheck::new("hodge-index", 0.0, hodge, tol));
    Ok(CorollaryReport {
        dimension: d,
        mixed: i,
        checks,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_bundle, make_model, MetricSpec};

    fn can(a: i64, c: BigRational) -> HermitianLineBundle {
        make_bundle(make_model(ModelKind::P1Z), a, MetricSpec::canonical(c)).unwrap()
    }

    fn fs(a: i64, c: BigRational) -> HermitianLineBundle {
        make_bundle(make_model(ModelKind::P1Z), a, MetricSpec::fubini_study(c)).unwrap()
    }

    fn can2(a: i64, c: BigRational) -> HermitianLineBundle {
        make_bundle(make_model(ModelKind::P2Z), a, MetricSpec::canonical(c)).unwrap()
    }

    #[test]
    fn canonical_closed_forms() {
        let l1 = can(1, rational(1, 1));
        let l0 = can(1, rational(0, 1));
        let v = intersection_number(&[&l1, &l0], Method::ClosedForm).unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(
            intersection_number(&[&l1, &l1], Method::ClosedForm)
                .unwrap()
                .value,
            2.0
        );
        assert_eq!(volume_closed_form(&l1).unwrap(), 2.0);
        assert_eq!(volume_closed_form(&can(2, rational(5, 1))).unwrap(), 20.0);
        assert!(matches!(
            volume_closed_form(&l0),
            Err(Error::NotAmpleInCatalog(_))
        ));
        assert_eq!(intersection_exact(&[&l1, &l1]), Some(rational(2, 1)));
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let l1 = can(1, rational(1, 1));
        let l0 = can(1, rational(0, 1));
        let q = intersection_number(&[&l1, &l0], Method::Quadrature).unwrap();
        assert!((q.value - 1.0).abs() < 1e-9);
        let f = fs(1, rational(0, 1));
        let q = intersection_number(&[&f, &f], Method::Quadrature).unwrap();
        assert!((q.value - 0.5).abs() < 1e-8, "{q:?}");
        let mixed = intersection_number(&[&f, &l0], Method::Quadrature).unwrap();
        let mixed2 = intersection_number(&[&l0, &f], Method::Quadrature).unwrap();
        assert!(
            (mixed.value - 0.5 * std::f64::consts::LN_2).abs() < 1e-8,
            "{mixed:?}"
        );
        assert!((mixed.value - mixed2.value).abs() < 1e-8);
        let p = can2(2, rational(3, 2));
        let r = can2(1, rational(1, 3));
        let cf = intersection_number(&[&p, &r, &r], Method::ClosedForm)
            .unwrap()
            .value;
        let qd = intersection_number(&[&p, &r, &r], Method::Quadrature)
            .unwrap()
            .value;
        assert!((cf - qd).abs() < 1e-9);
        assert!((cf - (1.5 + 2.0 / 3.0 + 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn comparison_constant_examples() {
        let a = can(1, rational(1, 1));
        assert_eq!(comparison_constant(&a, &a).unwrap(), 4.0);
        let a2 = can(1, rational(2, 1));
        let b = can(1, rational(1, 1));
        // L·A = 1·2 + 1·1 = 3
        assert_eq!(comparison_constant(&b, &a2).unwrap(), 6.0);
        let l2 = can(2, rational(1, 1));
        // vol(L_Q) = 2, L·A = 2 + 1 = 3
        assert_eq!(comparison_constant(&l2, &a).unwrap(), 12.0);
    }

    #[test]
    fn corollaries() {
        let a = can(1, rational(1, 1));
        let b = can(1, rational(4, 1));
        let r = corollary_checks(&a, &b).unwrap();
        assert!(r.all_hold());
        assert_eq!(r.mixed[1], 5.0);
        assert!((r.checks[0].rhs - 4.0).abs() < 1e-12);
        assert_eq!(r.lambda, 2.5);
        let h = &r.checks[3];
        assert!((h.rhs + 4.5).abs() < 1e-12);
        let same = corollary_checks(&a, &a).unwrap();
        assert!(same.checks[1].slack.abs() < 1e-12);
        let p = can2(1, rational(1, 1));
        let q = can2(2, rational(1, 3));
        assert!(corollary_checks(&p, &q).unwrap().all_hold());
    }

    #[test]
    fn validation() {
        let m = make_model(ModelKind::P1Z);
        assert!(IntersectionForm::new(m, Method::Quadrature, 0.0).is_err());
        let l = can(1, rational(1, 1));
        let f = IntersectionForm::new(m, Method::ClosedForm, 1e-9).unwrap();
        assert!(matches!(
            f.evaluate(&[&l]),
            Err(Error::DimensionMismatch(1, 2))
        ));
        let p = can2(1, rational(1, 1));
        assert!(matches!(
            f.evaluate(&[&l, &p]),
            Err(Error::ModelMismatch(_))
        ));
    }
}
