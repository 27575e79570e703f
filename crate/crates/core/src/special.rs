//! Riemann zeta and Bose (polylogarithm) functions on the real segment
//! `0 ≤ z ≤ 1`.
//!
//! `g_s(z) = Σ_{l≥1} z^l / l^s`. For `z ≤ 1/2` the series converges
//! geometrically and is summed directly. Closer to `z = 1` the terms decay
//! like `l^{-s}` and we sum a fixed head explicitly, then add the tail through
//! the Euler–Maclaurin formula: the tail integral `∫_N^∞ e^{-xt} t^{-s} dt`
//! (with `x = -ln z`) plus Bernoulli corrections built from exact derivatives
//! of the summand. At `z = 1` the integral is elementary and the same
//! expansion gives `ζ(s)`.

use crate::error::{Error, Result};
use crate::quad;

/// Explicitly summed head of the Euler–Maclaurin expansion.
const EM_HEAD: u32 = 16;

/// `B_{2j} / (2j)!` for `j = 1..=9`.
const BERNOULLI_OVER_FACTORIAL: [f64; 9] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
    43_867.0 / 5_109_094_217_170_944_000.0,
];

/// `Γ(n/2)` for a positive integer `n`.
pub fn gamma_half_integer(n: u32) -> f64 {
    assert!(n > 0, "Γ(0) is not finite");
    let mut value = if n.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut arg = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    let target = n as f64 / 2.0;
    while arg < target {
        value *= arg;
        arg += 1.0;
    }
    value
}

/// Surface area of the unit sphere in `d` dimensions, `2π^{d/2}/Γ(d/2)`.
pub fn unit_sphere_area(dimension: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(dimension as f64 / 2.0) / gamma_half_integer(dimension as u32)
}

/// Riemann zeta function for real `s > 1`.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::Domain(format!("zeta(s) diverges for s = {s} <= 1")));
    }
    Ok(euler_maclaurin(s, 0.0))
}

/// Bose function `g_s(z)` for `0 ≤ z ≤ 1`; `z = 1` requires `s > 1`.
pub fn bose(s: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("g_s(z) evaluated outside 0 <= z <= 1 (z = {z})")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return zeta(s);
    }
    if z <= 0.5 {
        return Ok(direct_series(s, z));
    }
    Ok(euler_maclaurin(s, -z.ln()))
}

/// `g_s(e^{βα})` taking the exponent directly, which keeps full precision for
/// `βα` near zero.
pub fn bose_of_exponent(s: f64, beta_alpha: f64) -> Result<f64> {
    if beta_alpha > 0.0 || beta_alpha.is_nan() {
        return Err(Error::Domain(format!("Bose function needs βα <= 0, got {beta_alpha}")));
    }
    if beta_alpha == 0.0 {
        return zeta(s);
    }
    let x = -beta_alpha;
    if x >= std::f64::consts::LN_2 {
        return Ok(direct_series(s, beta_alpha.exp()));
    }
    Ok(euler_maclaurin(s, x))
}

fn direct_series(s: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for l in 1..10_000u32 {
        power *= z;
        let term = power / (l as f64).powf(s);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// `Σ_{l≥1} e^{-x l} l^{-s}` via an explicit head and an Euler–Maclaurin tail.
fn euler_maclaurin(s: f64, x: f64) -> f64 {
    let n = EM_HEAD as f64;
    let head: f64 = (1..EM_HEAD).map(|l| (-x * l as f64).exp() / (l as f64).powf(s)).sum();
    let tail_integral = if x == 0.0 { n.powf(1.0 - s) / (s - 1.0) } else { tail_integral(s, x, n) };
    let f_n = (-x * n).exp() * n.powf(-s);
    let mut correction = 0.0;
    for (j, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let order = 2 * j + 1;
        correction -= coeff * derivative(s, x, n, order);
    }
    head + tail_integral + 0.5 * f_n + correction
}

/// `d^k/dt^k [e^{-xt} t^{-s}]` at `t`.
fn derivative(s: f64, x: f64, t: f64, k: usize) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    // Rising factorial (s)_i and powers of -x built incrementally.
    let mut rising = 1.0;
    for i in 0..=k {
        let power_part = if i == 0 { 1.0 } else { rising };
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let exp_part = (-x).powi((k - i) as i32);
        total += binom * sign * power_part * t.powf(-s - i as f64) * exp_part;
        rising *= s + i as f64;
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    total * (-x * t).exp()
}

/// `∫_N^∞ e^{-xt} t^{-s} dt` for `x > 0`, via `t = N e^v`.
fn tail_integral(s: f64, x: f64, n: f64) -> f64 {
    let xn = x * n;
    let exponent = |v: f64| (1.0 - s) * v - xn * v.exp_m1();
    let mut upper = 1.0;
    while exponent(upper) > -60.0 {
        upper += 1.0;
    }
    let q = quad::integrate(|v| exponent(v).exp(), 0.0, upper, 1e-300, 1e-15, 4000);
    n.powf(1.0 - s) * (-xn).exp() * q.value
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct summation with a midpoint tail integral; independent of the
    /// Euler–Maclaurin path above. Error is O(L^{-s-2}).
    fn zeta_oracle(s: f64) -> f64 {
        let terms = 200_000u32;
        let head: f64 = (1..=terms).rev().map(|l| (l as f64).powf(-s)).sum();
        let m = terms as f64 + 0.5;
        head + m.powf(1.0 - s) / (s - 1.0)
    }

    #[test]
    fn zeta_against_direct_sums() {
        for &s in &[1.5, 2.0, 2.5, 3.0, 4.5] {
            let got = zeta(s).unwrap();
            let want = zeta_oracle(s);
            assert!(((got - want) / want).abs() < 1e-12, "s={s}: {got} vs {want}");
        }
        let pi = std::f64::consts::PI;
        assert!((zeta(2.0).unwrap() - pi * pi / 6.0).abs() < 1e-15);
        assert!((zeta(4.0).unwrap() - pi.powi(4) / 90.0).abs() < 1e-15);
    }

    #[test]
    fn zeta_domain() {
        assert!(zeta(1.0).is_err());
        assert!(zeta(0.5).is_err());
    }

    #[test]
    fn bose_half_series_structure() {
        // g_s(1/2) = Σ 2^{-l} l^{-s}; partial sums increase monotonically.
        let s = 2.5;
        let mut partial = 0.0;
        let mut last = 0.0;
        for l in 1..80 {
            partial += 0.5f64.powi(l) / (l as f64).powf(s);
            assert!(partial >= last);
            last = partial;
        }
        assert!((bose(s, 0.5).unwrap() - partial).abs() < 1e-16);
        // g_1(z) = -ln(1 - z)
        assert!((bose(1.0, 0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bose_near_one_matches_direct_sums() {
        for &s in &[0.5, 1.0, 1.5, 2.5] {
            for &z in &[0.6f64, 0.9, 0.99, 0.999] {
                let direct: f64 = (1..2_000_000u32).rev().map(|l| (l as f64 * z.ln()).exp() / (l as f64).powf(s)).sum();
                let got = bose(s, z).unwrap();
                assert!(((got - direct) / direct).abs() < 1e-12, "s={s} z={z}: {got} vs {direct}");
            }
        }
        assert!((bose(1.0, 0.9).unwrap() + (0.1f64).ln()).abs() < 1e-14);
    }

    #[test]
    fn bose_is_continuous_at_the_switch_points() {
        for &s in &[1.5, 2.5] {
            let below = bose(s, 0.5).unwrap();
            let above = euler_maclaurin(s, -(0.5f64).ln());
            assert!(((below - above) / below).abs() < 1e-14);
            let near_one = bose_of_exponent(s, -1e-14).unwrap();
            assert!((near_one - zeta(s).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn bose_domain() {
        assert!(bose(2.5, 1.2).is_err());
        assert!(bose(1.0, 1.0).is_err());
        assert_eq!(bose(2.5, 0.0).unwrap(), 0.0);
        assert!(bose_of_exponent(1.5, 0.1).is_err());
    }

    #[test]
    fn gamma_and_sphere() {
        assert!((gamma_half_integer(1) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half_integer(2), 1.0);
        assert!((gamma_half_integer(5) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-15);
        let pi = std::f64::consts::PI;
        assert!((unit_sphere_area(3) - 4.0 * pi).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 2.0 * pi).abs() < 1e-14);
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-14);
    }
}
