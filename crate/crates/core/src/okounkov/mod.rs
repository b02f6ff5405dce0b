//! Scaled valuation points, exact rational polytopes, Minkowski sums and
//! Okounkov-body estimates.

mod hull;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::{HermitianLineBundle, ModelKind};
use crate::norms::Enclosure;
use crate::numeric::ratio_to_f64;
use crate::valuation::{nu_bounds, valuation_image_lattice, Flag, ValuationImage};
use crate::{Error, Result};

pub use hull::{HalfSpace, Point};

/// Exact convex polytope in `Q^d`, `d ∈ {2, 3}`.
#[derive(Debug, Clone)]
pub struct RationalPolytope {
    dimension: usize,
    vertices: Vec<Point>,
    facets: Vec<Vec<usize>>,
    inequalities: Vec<HalfSpace>,
    equations: Vec<HalfSpace>,
    affine_dim: usize,
    volume: BigRational,
}

impl PartialEq for RationalPolytope {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension && self.vertices == other.vertices
    }
}

impl RationalPolytope {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Extreme points: counterclockwise from the lexicographic minimum in
    /// the plane, lexicographically sorted in space.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Facets of a full-dimensional 3D polytope (vertex indices,
    /// counterclockwise seen from outside).
    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    pub fn volume(&self) -> &BigRational {
        &self.volume
    }

    /// Dimension of the affine hull (0 for a point or the empty set).
    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, x: &[BigRational]) -> bool {
        if self.is_empty() || x.len() != self.dimension {
            return false;
        }
        if self.affine_dim == 0 {
            return self.vertices[0].as_slice() == x;
        }
        self.equations.iter().all(|h| h.eval(x).is_zero())
            && self.inequalities.iter().all(|h| !h.eval(x).is_positive())
    }

    pub fn empty(dimension: usize) -> Self {
        convex_hull(&[], dimension)
    }
}

/// Exact convex hull of points in `Q^d`.
pub fn convex_hull(points: &[Point], dimension: usize) -> RationalPolytope {
    assert!(
        points.iter().all(|p| p.len() == dimension),
        "points must have {dimension} coordinates"
    );
    let h = hull::hull(points, dimension);
    RationalPolytope {
        dimension,
        vertices: h.vertices,
        facets: h.facets,
        inequalities: h.inequalities,
        equations: h.equations,
        affine_dim: h.affine_dim,
        volume: h.volume,
    }
}

/// Verified valuation points divided coordinatewise by `m`.
pub fn scale_points(image: &ValuationImage) -> Vec<Point> {
    let m = BigInt::from(image.m);
    image
        .verified
        .iter()
        .map(|v| {
            v.iter()
                .map(|&c| BigRational::new(BigInt::from(c), m.clone()))
                .collect()
        })
        .collect()
}

pub fn minkowski_sum(p: &RationalPolytope, q: &RationalPolytope) -> Result<RationalPolytope> {
    if p.dimension != q.dimension {
        return Err(Error::DimensionMismatch(p.dimension, q.dimension));
    }
    let mut sums = Vec::with_capacity(p.vertices.len() * q.vertices.len());
    for a in &p.vertices {
        for b in &q.vertices {
            sums.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
        }
    }
    Ok(convex_hull(&sums, p.dimension))
}

/// Certified enclosure of `q^{1/d}` for `q >= 0`, checked by exact powers.
pub fn root_enclosure(q: &BigRational, d: u32) -> Enclosure {
    if q.is_zero() {
        return Enclosure::point(0.0);
    }
    let x = ratio_to_f64(q);
    let r = if d == 2 {
        x.sqrt()
    } else {
        x.powf(1.0 / d as f64)
    };
    let pow = |y: f64| -> Option<BigRational> {
        let y = BigRational::from_f64(y)?;
        Some(num_traits::pow(y, d as usize))
    };
    let mut k = 1.0;
    loop {
        let lo = r * (1.0 - k * f64::EPSILON);
        let hi = r * (1.0 + k * f64::EPSILON);
        let ok_lo = pow(lo).is_some_and(|v| v <= *q);
        let ok_hi = pow(hi).is_some_and(|v| v >= *q);
        if ok_lo && ok_hi {
            return Enclosure::new(lo, hi);
        }
        k *= 2.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrunnMinkowskiReport {
    pub dimension: usize,
    #[serde(with = "rational_str")]
    pub vol_p: BigRational,
    #[serde(with = "rational_str")]
    pub vol_q: BigRational,
    #[serde(with = "rational_str")]
    pub vol_sum: BigRational,
    /// `vol(P+Q)^{1/d}`
    pub lhs: Enclosure,
    /// `vol(P)^{1/d} + vol(Q)^{1/d}`
    pub rhs: Enclosure,
    /// Midpoint estimate of `lhs − rhs`.
    pub slack: f64,
    /// Decided exactly.
    pub holds: bool,
}

/// `c^{1/d} ≥ a^{1/d} + b^{1/d}` for nonnegative rationals, `d ∈ {2, 3}`,
/// decided exactly.
pub fn root_sum_holds(a: &BigRational, b: &BigRational, c: &BigRational, d: usize) -> bool {
    let x = c - a - b;
    let ab = a * b;
    !x.is_negative()
        && match d {
            2 => &x * &x >= BigRational::from_integer(4.into()) * &ab,
            3 => {
                // with u = (ab)^{1/3}(a^{1/3} + b^{1/3}): u³ − 3·ab·u − ab(a+b) = 0,
                // and the claim is x/3 ≥ u
                let y = &x / BigRational::from_integer(3.into());
                let three = BigRational::from_integer(3.into());
                let g = &y * &y * &y - three * &ab * &y - &ab * (a + b);
                !g.is_negative()
            }
            _ => unreachable!("dimension two or three"),
        }
}

/// `vol(P+Q)^{1/d} ≥ vol(P)^{1/d} + vol(Q)^{1/d}`, decided in exact
/// arithmetic.
pub fn brunn_minkowski_check(
    p: &RationalPolytope,
    q: &RationalPolytope,
) -> Result<BrunnMinkowskiReport> {
    let sum = minkowski_sum(p, q)?;
    let d = p.dimension;
    let (a, b, c) = (p.volume.clone(), q.volume.clone(), sum.volume.clone());
    let holds = root_sum_holds(&a, &b, &c, d);
    let dd = d as u32;
    let lhs = root_enclosure(&c, dd);
    let ra = root_enclosure(&a, dd);
    let rb = root_enclosure(&b, dd);
    let rhs = Enclosure::new(ra.lo + rb.lo, ra.hi + rb.hi);
    Ok(BrunnMinkowskiReport {
        dimension: d,
        vol_p: a,
        vol_q: b,
        vol_sum: c,
        lhs,
        rhs,
        slack: lhs.mid() - rhs.mid(),
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OkounkovApprox {
    pub polytope: RationalPolytope,
    pub m_schedule: Vec<u32>,
    pub verified_point_count: usize,
    pub unknown_point_count: usize,
    #[serde(with = "rational_str")]
    pub volume_lower: BigRational,
    #[serde(with = "rational_str")]
    pub volume_upper: BigRational,
    /// Per-axis upper bounds of the scaled points: `[x, degree]`.
    #[serde(with = "rational_vec")]
    pub bound_box: Vec<BigRational>,
    /// Union of scaled verified points over the schedule.
    #[serde(skip)]
    pub points: Vec<Point>,
}

pub(crate) fn check_schedule(schedule: &[u32]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty m schedule".into()));
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "m schedule {schedule:?} must be increasing and positive"
        )));
    }
    Ok(())
}

/// Hull of the scaled valuation images of `mL̄` over a schedule of `m`.
pub fn okounkov_run(
    bundle: &HermitianLineBundle,
    flag: &Flag,
    m_schedule: &[u32],
    budget: usize,
) -> Result<OkounkovApprox> {
    check_schedule(m_schedule)?;
    let images = m_schedule
        .iter()
        .map(|&m| valuation_image_lattice(bundle, m, flag, budget))
        .collect::<Result<Vec<_>>>()?;
    Ok(approx_from_images(bundle, flag, m_schedule, &images))
}

pub(crate) fn approx_from_images(
    bundle: &HermitianLineBundle,
    flag: &Flag,
    m_schedule: &[u32],
    images: &[ValuationImage],
) -> OkounkovApprox {
    let dim = flag.dimension();
    let mut points: BTreeSet<Point> = BTreeSet::new();
    let mut verified = 0;
    let mut unknown = 0;
    for img in images {
        verified += img.verified.len();
        unknown += img.unknown.len();
        points.extend(scale_points(img));
    }
    let points: Vec<Point> = points.into_iter().collect();
    let polytope = convex_hull(&points, dim);
    let mut x_max = BigRational::zero();
    for &m in m_schedule {
        let b = nu_bounds(flag, bundle, m)[0].max(0);
        let r = BigRational::new(BigInt::from(b), BigInt::from(m));
        if r > x_max {
            x_max = r;
        }
    }
    let a = BigRational::from_integer(BigInt::from(bundle.degree()));
    let volume_upper = match bundle.model().kind() {
        ModelKind::P1Z => &x_max * &a,
        ModelKind::P2Z => &x_max * &a * &a / BigRational::from_integer(2.into()),
    };
    let mut bound_box = vec![x_max, a.clone()];
    if dim == 3 {
        bound_box.push(a);
    }
    OkounkovApprox {
        volume_lower: polytope.volume.clone(),
        polytope,
        m_schedule: m_schedule.to_vec(),
        verified_point_count: verified,
        unknown_point_count: unknown,
        volume_upper,
        bound_box,
        points,
    }
}

/// SVG 1.1 drawing of a planar polytope with optional bound box and target
/// rectangle `[0, w] × [0, h]`.
pub fn polytope_svg(
    poly: &RationalPolytope,
    bound_box: Option<(f64, f64)>,
    target: Option<(f64, f64)>,
) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    let pts: Vec<(f64, f64)> = poly
        .vertices
        .iter()
        .map(|v| (ratio_to_f64(&v[0]), ratio_to_f64(&v[1])))
        .collect();
    let mut xmax: f64 = 1e-9;
    let mut ymax: f64 = 1e-9;
    for &(x, y) in pts.iter().chain(bound_box.iter()).chain(target.iter()) {
        xmax = xmax.max(x);
        ymax = ymax.max(y);
    }
    let sx = (SIZE - 2.0 * PAD) / xmax;
    let sy = (SIZE - 2.0 * PAD) / ymax;
    let tx = |x: f64| PAD + x * sx;
    let ty = |y: f64| SIZE - PAD - y * sy;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="black"/>"#,
        tx(0.0),
        ty(0.0),
        tx(xmax),
        ty(0.0)
    );
    let _ = writeln!(
        out,
        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="black"/>"#,
        tx(0.0),
        ty(0.0),
        tx(0.0),
        ty(ymax)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" font-size="12">{}</text>"#,
        tx(xmax) - 30.0,
        ty(0.0) + 16.0,
        fmt_tick(xmax)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" font-size="12">{}</text>"#,
        4.0,
        ty(ymax) + 4.0,
        fmt_tick(ymax)
    );
    let rect = |out: &mut String, (w, h): (f64, f64), style: &str| {
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" {style}/>"#,
            tx(0.0),
            ty(h),
            w * sx,
            h * sy
        );
    };
    if let Some(b) = bound_box {
        rect(
            &mut out,
            b,
            r#"fill="none" stroke="gray" stroke-dasharray="4 3""#,
        );
    }
    if let Some(t) = target {
        rect(&mut out, t, r#"fill="none" stroke="firebrick""#);
    }
    match pts.len() {
        0 => {}
        1 => {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="steelblue"/>"#,
                tx(pts[0].0),
                ty(pts[0].1)
            );
        }
        _ => {
            let coords: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.3},{:.3}", tx(x), ty(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="steelblue" fill-opacity="0.35" stroke="steelblue"/>"#,
                coords.join(" ")
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn fmt_tick(x: f64) -> String {
    format!("{x:.3}")
}

pub(crate) mod rational_str {
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|_| D::Error::custom(format!("bad rational {s:?}")))
    }
}

pub(crate) mod rational_vec {
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .into_iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| D::Error::custom(format!("bad rational {s:?}")))
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct PolytopeWire {
    dimension: usize,
    vertices: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    facets: Vec<Vec<usize>>,
    volume: String,
}

impl Serialize for RationalPolytope {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolytopeWire {
            dimension: self.dimension,
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(|q| q.to_string()).collect())
                .collect(),
            facets: self.facets.clone(),
            volume: self.volume.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalPolytope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = PolytopeWire::deserialize(d)?;
        if !(2..=3).contains(&w.dimension) {
            return Err(D::Error::custom("polytope dimension must be 2 or 3"));
        }
        let mut pts = Vec::with_capacity(w.vertices.len());
        for v in &w.vertices {
            if v.len() != w.dimension {
                return Err(D::Error::custom("vertex has the wrong length"));
            }
            let p: std::result::Result<Point, _> =
                v.iter().map(|s| s.parse::<BigRational>()).collect();
            pts.push(p.map_err(|_| D::Error::custom("bad rational coordinate"))?);
        }
        let poly = convex_hull(&pts, w.dimension);
        if poly.volume.to_string() != w.volume || poly.vertices.len() != pts.len() {
            return Err(D::Error::custom("vertices and volume are inconsistent"));
        }
        Ok(poly)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_bundle, make_model, MetricSpec};
    use crate::numeric::rational;

    fn pts(raw: &[&[i64]]) -> Vec<Point> {
        raw.iter()
            .map(|p| p.iter().map(|&x| rational(x, 1)).collect())
            .collect()
    }

    #[test]
    fn minkowski_examples() {
        let sq = convex_hull(&pts(&[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]), 2);
        let s2 = minkowski_sum(&sq, &sq).unwrap();
        assert_eq!(s2.volume(), &rational(4, 1));
        let pt = convex_hull(&pts(&[&[3, -1]]), 2);
        assert_eq!(minkowski_sum(&sq, &pt).unwrap().volume(), &rational(1, 1));
        let tri = convex_hull(&pts(&[&[0, 0], &[1, 0], &[0, 1]]), 2);
        assert_eq!(minkowski_sum(&tri, &tri).unwrap().volume(), &rational(2, 1));
        let cube = convex_hull(&pts(&[&[0, 0, 0], &[1, 1, 1]]), 3);
        assert_eq!(
            minkowski_sum(&sq, &cube),
            Err(Error::DimensionMismatch(2, 3))
        );
    }

    #[test]
    fn brunn_minkowski_examples() {
        let sq = convex_hull(&pts(&[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]), 2);
        let r = brunn_minkowski_check(&sq, &sq).unwrap();
        assert!(r.holds);
        assert!(r.slack.abs() < 1e-12);
        let tri = convex_hull(&pts(&[&[0, 0], &[1, 0], &[0, 1]]), 2);
        let r = brunn_minkowski_check(&sq, &tri).unwrap();
        // [0,1]² + triangle: hexagon of area 1 + 1/2 + 2·1 = 7/2 by the mixed-area formula
        assert_eq!(r.vol_sum, rational(7, 2));
        assert!(r.holds && r.slack > 0.0);
        let seg = convex_hull(&pts(&[&[0, 0], &[2, 0]]), 2);
        let r = brunn_minkowski_check(&sq, &seg).unwrap();
        assert_eq!(r.vol_q, rational(0, 1));
        assert!(r.holds && r.vol_sum >= r.vol_p);
        let c1 = convex_hull(&pts(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]), 3);
        let r = brunn_minkowski_check(&c1, &c1).unwrap();
        assert!(r.holds);
        assert!(r.slack.abs() < 1e-12);
        assert_eq!(r.vol_sum, rational(8, 6));
    }

    #[test]
    fn bm_rejects_a_fake_violation() {
        // vol(P+Q) deliberately too small: exact test must say no
        let mut p = convex_hull(&pts(&[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]), 2);
        let sum = minkowski_sum(&p, &p).unwrap();
        assert!(brunn_minkowski_check(&p, &p).unwrap().holds);
        p.volume = sum.volume.clone();
        assert!(!brunn_minkowski_check(&p, &p).unwrap().holds);
    }

    #[test]
    fn root_enclosures_are_certified() {
        for (n, d) in [(2, 1), (7, 3), (1, 3), (12345, 7)] {
            for k in [2u32, 3] {
                let q = rational(n, d);
                let e = root_enclosure(&q, k);
                assert!(e.width() <= 1e-12 * e.hi.max(1.0));
                let x = ratio_to_f64(&q).powf(1.0 / k as f64);
                assert!((e.mid() - x).abs() <= 1e-14 * x.max(1.0));
            }
        }
    }

    #[test]
    fn canonical_run_at_p7() {
        let b = make_bundle(
            make_model(ModelKind::P1Z),
            1,
            MetricSpec::canonical(rational(1, 1)),
        )
        .unwrap();
        let f = Flag::p1(7, Some(0)).unwrap();
        let run = okounkov_run(&b, &f, &[20], 100_000).unwrap();
        assert_eq!(run.polytope.volume(), &rational(1, 2));
        assert_eq!(run.verified_point_count, 11 * 21);
        assert_eq!(run.unknown_point_count, 0);
        let v = ratio_to_f64(run.polytope.volume()) * 7f64.ln();
        assert!((v - 0.97295507452765).abs() < 1e-9);
        assert!(run.volume_lower <= run.volume_upper);
        assert!(run.points.iter().all(|p| run.polytope.contains(p)));
        let zero = make_bundle(
            make_model(ModelKind::P1Z),
            1,
            MetricSpec::canonical(rational(0, 1)),
        )
        .unwrap();
        let run = okounkov_run(&zero, &f, &[4], 100_000).unwrap();
        assert_eq!(run.polytope.affine_dim(), 1);
        assert!(run.polytope.volume().is_zero());
        assert_eq!(run.polytope.vertices(), pts(&[&[0, 0], &[0, 1]]).as_slice());
    }

    #[test]
    fn schedule_monotone_along_chain() {
        let b = make_bundle(
            make_model(ModelKind::P1Z),
            1,
            MetricSpec::canonical(rational(1, 1)),
        )
        .unwrap();
        let f = Flag::p1(7, Some(0)).unwrap();
        let mut last = BigRational::zero();
        for sched in [&[5u32][..], &[5, 10], &[5, 10, 20]] {
            let run = okounkov_run(&b, &f, sched, 100_000).unwrap();
            assert!(run.polytope.volume() >= &last);
            last = run.polytope.volume().clone();
        }
        assert!(okounkov_run(&b, &f, &[], 10).is_err());
        assert!(okounkov_run(&b, &f, &[3, 2], 10).is_err());
    }

    #[test]
    fn polytope_json_round_trip() {
        let tri = convex_hull(&pts(&[&[0, 0], &[1, 0], &[0, 1], &[0, 0]]), 2);
        let s = serde_json::to_string(&tri).unwrap();
        assert_eq!(
            s,
            r#"{"dimension":2,"vertices":[["0","0"],["1","0"],["0","1"]],"volume":"1/2"}"#
        );
        let back: RationalPolytope = serde_json::from_str(&s).unwrap();
        assert_eq!(back, tri);
        assert!(serde_json::from_str::<RationalPolytope>(
            r#"{"dimension":2,"vertices":[["0","0"]],"volume":"1"}"#
        )
        .is_err());
    }

    #[test]
    fn svg_has_polygon_and_overlays() {
        let sq = convex_hull(&pts(&[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]), 2);
        let s = polytope_svg(&sq, Some((1.0, 1.0)), Some((0.5, 1.0)));
        assert!(s.starts_with("<?xml"));
        assert!(s.contains("<polygon"));
        assert_eq!(s.matches("<rect").count(), 3);
    }
}
