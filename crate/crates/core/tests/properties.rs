use arith_okounkov::numeric::rational;
use arith_okounkov::okounkov::{brunn_minkowski_check, convex_hull, minkowski_sum, Point};
use arith_okounkov::sections::{enumerate_effective, multiply};
use arith_okounkov::valuation::lll::{determinant, is_reduced};
use arith_okounkov::valuation::{lll_reduce_weighted, nu_small, Flag, FlagPoint};
use arith_okounkov::{make_bundle, make_model, MetricSpec, ModelKind};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn points(dim: usize, max: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(prop::collection::vec((-9i64..=9, 1i64..=3), dim), 1..=max).prop_map(
        |v| {
            v.into_iter()
                .map(|p| p.into_iter().map(|(n, d)| rational(n, d)).collect())
                .collect()
        },
    )
}

/// Area of the hull of planar points as an integral of the vertical
/// extent, which is linear between consecutive point abscissae.  On a line
/// `x = t` strictly between two abscissae the hull boundary lies on segments
/// joining a point left of `t` to a point right of it.
fn envelope_area(pts: &[Point]) -> BigRational {
    let mut xs: Vec<BigRational> = pts.iter().map(|p| p[0].clone()).collect();
    xs.sort();
    xs.dedup();
    let extent = |t: &BigRational| -> BigRational {
        let ys: Vec<BigRational> = pts
            .iter()
            .flat_map(|a| pts.iter().map(move |b| (a, b)))
            .filter(|(a, b)| a[0] < *t && *t < b[0])
            .map(|(a, b)| &a[1] + (&b[1] - &a[1]) * (t - &a[0]) / (&b[0] - &a[0]))
            .collect();
        ys.iter().max().unwrap() - ys.iter().min().unwrap()
    };
    let mut area = BigRational::zero();
    for w in xs.windows(2) {
        let mid = (&w[0] + &w[1]) / BigRational::from_integer(2.into());
        area += extent(&mid) * (&w[1] - &w[0]);
    }
    area
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planar_hull_area_matches_envelope_integral(pts in points(2, 7)) {
        let hull = convex_hull(&pts, 2);
        prop_assert_eq!(hull.volume().clone(), envelope_area(&pts));
        for p in &pts {
            prop_assert!(hull.contains(p));
        }
    }

    #[test]
    fn minkowski_doubling_scales_volume(pts in points(3, 7)) {
        let p = convex_hull(&pts, 3);
        let twice = minkowski_sum(&p, &p).unwrap();
        prop_assert_eq!(twice.volume().clone(), p.volume() * BigRational::from_integer(8.into()));
        let doubled: Vec<Point> = pts
            .iter()
            .map(|v| v.iter().map(|x| x * BigRational::from_integer(2.into())).collect())
            .collect();
        prop_assert_eq!(twice, convex_hull(&doubled, 3));
    }

    #[test]
    fn hull_is_monotone_under_insertion(a in points(3, 6), b in points(3, 4)) {
        let small = convex_hull(&a, 3);
        let all: Vec<Point> = a.iter().chain(&b).cloned().collect();
        let big = convex_hull(&all, 3);
        prop_assert!(small.volume() <= big.volume());
        for v in small.vertices() {
            prop_assert!(big.contains(v));
        }
    }

    #[test]
    fn brunn_minkowski_slack_nonnegative(a in points(2, 6), b in points(2, 6), c in points(3, 6), d in points(3, 6)) {
        let r = brunn_minkowski_check(&convex_hull(&a, 2), &convex_hull(&b, 2)).unwrap();
        prop_assert!(r.holds && r.slack >= -1e-12);
        let r = brunn_minkowski_check(&convex_hull(&c, 3), &convex_hull(&d, 3)).unwrap();
        prop_assert!(r.holds && r.slack >= -1e-12);
    }

    #[test]
    fn valuation_is_additive_on_p1(
        f in prop::collection::vec(-20i64..=20, 1..=4),
        g in prop::collection::vec(-20i64..=20, 1..=4),
        p in prop::sample::select(vec![2u64, 3, 5, 7]),
        alpha in 0u64..7,
    ) {
        prop_assume!(f.iter().any(|&x| x != 0) && g.iter().any(|&x| x != 0));
        let flag = if alpha >= p { Flag::p1(p, None) } else { Flag::p1(p, Some(alpha)) }.unwrap();
        let (df, dg) = (f.len() - 1, g.len() - 1);
        let fg = multiply(ModelKind::P1Z, df, &f, dg, &g).unwrap();
        let nf = nu_small(&flag.coords(df), &f).unwrap();
        let ng = nu_small(&flag.coords(dg), &g).unwrap();
        let nfg = nu_small(&flag.coords(df + dg), &fg).unwrap();
        let sum: Vec<i64> = nf.iter().zip(&ng).map(|(a, b)| a + b).collect();
        prop_assert_eq!(nfg, sum);
    }

    #[test]
    fn valuation_is_additive_on_p2(
        f in prop::collection::vec(-9i64..=9, 3),
        g in prop::collection::vec(-9i64..=9, 3),
        p in prop::sample::select(vec![2u64, 3, 5]),
    ) {
        prop_assume!(f.iter().any(|&x| x != 0) && g.iter().any(|&x| x != 0));
        let flag = Flag::new(ModelKind::P2Z, p, FlagPoint::Plane { line: [1, 1, 1], point: [1, p - 1, 0] }).unwrap();
        let fg = multiply(ModelKind::P2Z, 1, &f, 1, &g).unwrap();
        let nf = nu_small(&flag.coords(1), &f).unwrap();
        let ng = nu_small(&flag.coords(1), &g).unwrap();
        let nfg = nu_small(&flag.coords(2), &fg).unwrap();
        let sum: Vec<i64> = nf.iter().zip(&ng).map(|(a, b)| a + b).collect();
        prop_assert_eq!(nfg, sum);
    }

    #[test]
    fn lll_is_unimodular_and_reduced(rows in prop::collection::vec(prop::collection::vec(-50i64..=50, 4), 4)) {
        let basis: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        let det = determinant(&basis);
        prop_assume!(!det.is_zero());
        let w = vec![BigInt::from(1); 4];
        let out = lll_reduce_weighted(&basis, &w).unwrap();
        prop_assert_eq!(determinant(&out.basis).abs(), det.abs());
        prop_assert_eq!(determinant(&out.transform).abs(), BigInt::from(1));
        prop_assert!(is_reduced(&out.basis, &w));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn effective_sets_are_symmetric_and_monotone(n in 0i64..=3, d in 2i64..=8) {
        let model = make_model(ModelKind::P1Z);
        let small = make_bundle(model, 1, MetricSpec::canonical(rational(n, d))).unwrap();
        let large = make_bundle(model, 1, MetricSpec::canonical(rational(n + 1, d))).unwrap();
        let a = enumerate_effective(&small, 2, 10_000_000).unwrap();
        let b = enumerate_effective(&large, 2, 10_000_000).unwrap();
        for s in &a.members {
            let neg: Vec<i64> = s.iter().map(|x| -x).collect();
            prop_assert!(a.contains(&neg));
            prop_assert!(b.contains(s));
        }
    }
}
