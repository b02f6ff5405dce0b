//! Browser bindings: effective-section counts, Okounkov hulls on P1 drawn
//! as SVG, and the log-concavity check for a pair of canonical bundles.

use arith_okounkov::experiments::theorem_b_closed_form;
use arith_okounkov::numeric::{fmt_sig12, ratio_to_f64};
use arith_okounkov::okounkov::{okounkov_run, polytope_svg};
use arith_okounkov::sections::{enumerate_effective, hzero_band};
use arith_okounkov::valuation::Flag;
use arith_okounkov::{make_bundle, make_model, HermitianLineBundle, MetricSpec, ModelKind};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::json;
use wasm_bindgen::prelude::*;

const NODE_BUDGET: usize = 2_000_000;
const SEARCH_BUDGET: usize = 50_000;
/// Keeps the page responsive.
const MAX_LEVEL: u32 = 60;

fn canonical(degree: i64, c_num: i64, c_den: i64) -> Result<HermitianLineBundle, String> {
    if c_den <= 0 {
        return Err("denominator must be positive".into());
    }
    let c = BigRational::new(BigInt::from(c_num), BigInt::from(c_den));
    make_bundle(make_model(ModelKind::P1Z), degree, MetricSpec::canonical(c))
        .map_err(|e| e.to_string())
}

fn level(m: u32) -> Result<u32, String> {
    if m == 0 || m > MAX_LEVEL {
        return Err(format!("m must lie in 1..={MAX_LEVEL}"));
    }
    Ok(m)
}

/// `ĥ⁰(mL̄)` for the canonical bundle of degree `degree` and constant
/// `c_num/c_den` on P1, as JSON `{rank, count, lo, hi}`.
pub fn hzero_json(degree: i64, c_num: i64, c_den: i64, m: u32) -> Result<String, String> {
    let b = canonical(degree, c_num, c_den)?;
    let m = level(m)?;
    let out = match enumerate_effective(&b, m, NODE_BUDGET) {
        Ok(set) if set.ambiguous_count == 0 => {
            let h = (set.len() as f64).ln();
            json!({"rank": set.rank, "count": set.len(), "lo": fmt_sig12(h), "hi": fmt_sig12(h)})
        }
        _ => {
            let (lo, hi) = hzero_band(&b, m);
            json!({"rank": b.rank(m), "count": null, "lo": fmt_sig12(lo), "hi": fmt_sig12(hi)})
        }
    };
    Ok(out.to_string())
}

/// Hull of `v(mL̄)/m` for the flag at `t = alpha` over `p`, as JSON with the
/// SVG drawing, the exact volume and `vol·log p`.
pub fn hull_json(c_num: i64, c_den: i64, p: u64, alpha: u64, m: u32) -> Result<String, String> {
    let b = canonical(1, c_num, c_den)?;
    let m = level(m)?;
    let flag = Flag::p1(p, Some(alpha)).map_err(|e| e.to_string())?;
    let approx = okounkov_run(&b, &flag, &[m], SEARCH_BUDGET).map_err(|e| e.to_string())?;
    let bb = &approx.bound_box;
    let svg = polytope_svg(
        &approx.polytope,
        Some((ratio_to_f64(&bb[0]), ratio_to_f64(&bb[1]))),
        None,
    );
    let vol = approx.polytope.volume();
    Ok(json!({
        "svg": svg,
        "volume": vol.to_string(),
        "volume_times_logp": fmt_sig12(ratio_to_f64(vol) * (p as f64).ln()),
        "points": approx.verified_point_count,
        "unknown": approx.unknown_point_count,
    })
    .to_string())
}

/// Closed-form check of `vol(L̄₁+L̄₂)^{1/2} ≥ vol(L̄₁)^{1/2} + vol(L̄₂)^{1/2}`
/// for canonical bundles on P1.
pub fn log_concavity_json(
    a1: i64,
    c1_num: i64,
    c1_den: i64,
    a2: i64,
    c2_num: i64,
    c2_den: i64,
) -> Result<String, String> {
    let b1 = canonical(a1, c1_num, c1_den)?;
    let b2 = canonical(a2, c2_num, c2_den)?;
    let r = theorem_b_closed_form(&b1, &b2).map_err(|e| e.to_string())?;
    Ok(json!({
        "vol1": fmt_sig12(r.vol1),
        "vol2": fmt_sig12(r.vol2),
        "vol_sum": fmt_sig12(r.vol_sum),
        "lhs": fmt_sig12(r.vol_sum.sqrt()),
        "rhs": fmt_sig12(r.vol1.sqrt() + r.vol2.sqrt()),
        "exact": r.exact,
        "holds": r.holds,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn hzero(degree: i32, c_num: i32, c_den: i32, m: u32) -> Result<String, JsError> {
    hzero_json(degree.into(), c_num.into(), c_den.into(), m).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn hull(c_num: i32, c_den: i32, p: u32, alpha: u32, m: u32) -> Result<String, JsError> {
    hull_json(c_num.into(), c_den.into(), p.into(), alpha.into(), m).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn log_concavity(
    a1: i32,
    c1_num: i32,
    c1_den: i32,
    a2: i32,
    c2_num: i32,
    c2_den: i32,
) -> Result<String, JsError> {
    log_concavity_json(
        a1.into(),
        c1_num.into(),
        c1_den.into(),
        a2.into(),
        c2_num.into(),
        c2_den.into(),
    )
    .map_err(|e| JsError::new(&e))
}
