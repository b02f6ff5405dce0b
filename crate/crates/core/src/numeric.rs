//! Small exact/real helpers shared by the modules: primes, logarithms of big
//! integers, rational brackets around `ln n`, and the threshold `e^{mc}/N`
//! against which sup-norms are compared.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Relative slack applied to every floating-point comparison with a
/// transcendental threshold.
pub(crate) const REL_EPS: f64 = 1e-14;

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization of `n >= 1`, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// p-adic valuation of a nonzero integer.
pub fn padic_valuation(mut v: i64, p: u64) -> u32 {
    debug_assert!(v != 0);
    let p = p as i64;
    let mut e = 0;
    while v % p == 0 {
        v /= p;
        e += 1;
    }
    e
}

pub fn ln_bigint(n: &BigInt) -> f64 {
    let n = n.abs();
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 900;
        let head: BigInt = &n >> shift;
        head.to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

pub fn ln_ratio(q: &BigRational) -> f64 {
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

pub fn ratio_to_f64(q: &BigRational) -> f64 {
    match q.to_f64() {
        Some(x) if x.is_finite() => x,
        _ => {
            let sign = if q.is_negative() { -1.0 } else { 1.0 };
            sign * ln_ratio(&q.abs()).exp()
        }
    }
}

const LOG_DIGITS: i64 = 1_000_000_000_000;

/// A rational number `>= ln n`, within about 2e-12 of it.
pub fn log_upper(n: u64) -> BigRational {
    let x = (n as f64).ln();
    let scaled = (x * LOG_DIGITS as f64).ceil() as i64 + 1;
    rational(scaled, LOG_DIGITS)
}

/// A rational number `<= ln n`, within about 2e-12 of it.
pub fn log_lower(n: u64) -> BigRational {
    let x = (n as f64).ln();
    let scaled = (x * LOG_DIGITS as f64).floor() as i64 - 1;
    rational(scaled.max(0), LOG_DIGITS)
}

/// `ln Γ(k/2)` for a positive integer `k`, by exact factorial products.
pub fn ln_gamma_half(k: u64) -> f64 {
    assert!(k > 0);
    if k % 2 == 0 {
        (1..k / 2).map(|j| (j as f64).ln()).sum()
    } else {
        // Γ(n + 1/2) = (2n)! / (4^n n!) · √π
        let n = (k - 1) / 2;
        let mut acc = 0.5 * std::f64::consts::PI.ln();
        for j in 1..=n {
            acc += ((2 * j - 1) as f64 / 2.0).ln();
        }
        acc
    }
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_zeros(&s)
    } else {
        let s = format!("{:.11e}", x);
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{}", trim_zeros(mantissa), e)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// The real number `T = r · e^{scale}` with `r` a positive rational, kept
/// symbolically: when `scale = 0` it is rational and comparisons are exact,
/// otherwise it is transcendental and never equals a rational number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Threshold {
    scale: BigRational,
    mult: BigRational,
}

impl Threshold {
    pub fn new(scale: BigRational) -> Self {
        Threshold {
            scale,
            mult: BigRational::one(),
        }
    }

    pub fn one() -> Self {
        Threshold::new(BigRational::zero())
    }

    /// The rational number `r`.
    pub fn rational(r: BigRational) -> Self {
        assert!(r.is_positive());
        Threshold {
            scale: BigRational::zero(),
            mult: r,
        }
    }

    pub fn scale(&self) -> &BigRational {
        &self.scale
    }

    pub fn divide_by(mut self, p: u64, e: u64) -> Self {
        if e > 0 {
            self.mult /= BigRational::from_integer(num_traits::pow(BigInt::from(p), e as usize));
        }
        self
    }

    /// Multiplies by a positive rational.
    pub fn times(mut self, r: &BigRational) -> Self {
        assert!(r.is_positive());
        self.mult *= r;
        self
    }

    pub fn divide_by_int(mut self, n: &BigInt) -> Self {
        self.mult /= BigRational::from_integer(n.clone());
        self
    }

    /// Multiplies by `e^{alpha}`.
    pub fn shifted(&self, alpha: &BigRational) -> Self {
        Threshold {
            scale: &self.scale + alpha,
            mult: self.mult.clone(),
        }
    }

    pub fn is_exact_one(&self) -> bool {
        self.scale.is_zero() && self.mult.is_one()
    }

    pub fn is_rational(&self) -> bool {
        self.scale.is_zero()
    }

    /// Enclosure of `ln T`.
    pub fn ln_enclosure(&self) -> (f64, f64) {
        if self.is_exact_one() {
            return (0.0, 0.0);
        }
        let s = ratio_to_f64(&self.scale);
        let d = ln_ratio(&self.mult);
        let x = s + d;
        let slack = (s.abs() + d.abs()) * REL_EPS + 1e-300;
        (x - slack, x + slack)
    }

    pub fn ln_mid(&self) -> f64 {
        let (lo, hi) = self.ln_enclosure();
        0.5 * (lo + hi)
    }

    /// Enclosure of `T` itself.
    pub fn enclosure(&self) -> (f64, f64) {
        if self.is_exact_one() {
            return (1.0, 1.0);
        }
        let (lo, hi) = self.ln_enclosure();
        (lo.exp() * (1.0 - REL_EPS), hi.exp() * (1.0 + REL_EPS))
    }

    /// Enclosure of `T^2`.
    pub fn squared_enclosure(&self) -> (f64, f64) {
        if self.is_exact_one() {
            return (1.0, 1.0);
        }
        let (lo, hi) = self.ln_enclosure();
        (
            (2.0 * lo).exp() * (1.0 - REL_EPS),
            (2.0 * hi).exp() * (1.0 + REL_EPS),
        )
    }

    /// Largest integer certainly `<= T` (saturating at `u64::MAX`).
    pub fn floor_lower(&self) -> u64 {
        let (lo, _) = self.enclosure();
        if lo >= u64::MAX as f64 {
            u64::MAX
        } else if lo < 0.0 {
            0
        } else {
            lo.floor() as u64
        }
    }

    /// Largest integer certainly `<= T`, without saturation.
    pub fn floor_lower_big(&self) -> num_bigint::BigUint {
        let (lo, _) = self.ln_enclosure();
        if self.is_exact_one() {
            return num_bigint::BigUint::one();
        }
        let t_lo = lo.exp() * (1.0 - REL_EPS);
        if !(t_lo >= 1.0) {
            return num_bigint::BigUint::zero();
        }
        if t_lo.is_finite() {
            return num_bigint::BigUint::from_f64(t_lo.floor()).unwrap_or_default();
        }
        // beyond f64 range: go through a shifted exponent
        let bits = (lo / std::f64::consts::LN_2).floor() - 60.0;
        let head = (lo - bits * std::f64::consts::LN_2).exp() * (1.0 - REL_EPS);
        num_bigint::BigUint::from_f64(head.floor()).unwrap_or_default() << (bits as usize)
    }

    /// Compares an exact nonnegative rational `q` with `T^2`.
    pub fn cmp_exact_squared(&self, q: &BigRational) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        if self.is_rational() {
            return q.cmp(&(&self.mult * &self.mult));
        }
        if q.is_zero() {
            return Ordering::Less;
        }
        // T is transcendental here, so only a separation failure of the
        // enclosures can leave this undecided.
        let lq = ln_ratio(q);
        let (lo, hi) = self.ln_enclosure();
        let margin = 1e-13 * (1.0 + lq.abs());
        if lq + margin < 2.0 * lo {
            Ordering::Less
        } else if lq - margin > 2.0 * hi {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_and_factors() {
        assert!(is_prime(2) && is_prime(7) && is_prime(101));
        assert!(!is_prime(1) && !is_prime(4) && !is_prime(91));
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factorize(1), vec![]);
        assert_eq!(padic_valuation(-250, 5), 3);
    }

    #[test]
    fn log_brackets() {
        for n in [2u64, 3, 7, 101] {
            let up = ratio_to_f64(&log_upper(n));
            let lo = ratio_to_f64(&log_lower(n));
            let x = (n as f64).ln();
            assert!(lo < x && x < up && up - lo < 1e-11);
        }
    }

    #[test]
    fn sig12() {
        assert_eq!(fmt_sig12(1.9459101090932196), "1.94591010909");
        assert_eq!(fmt_sig12(0.027044925472343384), "0.0270449254723");
        assert_eq!(fmt_sig12(4.0), "4");
        assert_eq!(fmt_sig12(1.5e-9), "1.5e-9");
    }

    #[test]
    fn threshold_cases() {
        let t = Threshold::one();
        assert!(t.is_exact_one());
        assert_eq!(t.enclosure(), (1.0, 1.0));
        let t = Threshold::new(rational(1, 1)).divide_by(7, 1);
        let (lo, hi) = t.enclosure();
        let x = 1f64.exp() / 7.0;
        assert!(lo <= x && x <= hi && hi - lo < 1e-12);
        assert_eq!(t.floor_lower(), 0);
        let big = Threshold::new(rational(120, 1)).floor_lower_big();
        assert!((ln_bigint(&BigInt::from(big)) - 120.0).abs() < 1e-10);
        assert!((ln_gamma_half(7) - (3.323350970447843f64).ln()).abs() < 1e-12);
        assert!((ln_gamma_half(8) - 6f64.ln()).abs() < 1e-12);
        assert_eq!(
            Threshold::new(rational(3, 1)).cmp_exact_squared(&rational(400, 1)),
            std::cmp::Ordering::Less
        );
    }
}
