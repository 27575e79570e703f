//! Transform-domain treatment of well-gapped modes.
//!
//! For a mode whose tilted weights `b_n = a(n) e^{βαn}` decay fast enough, the
//! generating function `A(z) = Σ b_n z^n` has no zeros in `|z| ≤ 1` and
//! `ln A(z) = Σ_{n≥1} κ_n z^n` converges on the unit circle. Summing `g·κ_n`
//! over shells gives the logarithm of the product over all such modes, which
//! we exponentiate on the roots of unity and invert with one FFT. Occupation
//! moments of these modes follow from `κ` alone:
//! `z d/dz ln A = Σ n κ_n z^n` and `(z d/dz)² A / A = Σ n² κ_n z^n + (Σ n κ_n z^n)²`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Coefficients `κ_1..` of `ln Σ b_n z^n` for `b_0 = 1`, stopping once
/// `n² |κ_n|` is negligible against the accumulated first moment.
pub(crate) fn log_series(b: &[f64], max_order: usize) -> Result<Vec<f64>> {
    debug_assert!(b.first().is_some_and(|&b0| (b0 - 1.0).abs() < 1e-15));
    let mut kappa = vec![0.0];
    let mut first_moment = 0.0;
    let mut quiet = 0;
    for n in 1..=max_order {
        let lo = if n >= b.len() { n - b.len() + 1 } else { 1 };
        let mut acc = 0.0;
        for j in lo..n {
            acc += j as f64 * kappa[j] * b[n - j];
        }
        let bn = b.get(n).copied().unwrap_or(0.0);
        let k = bn - acc / n as f64;
        kappa.push(k);
        let nf = n as f64;
        first_moment += nf * k.abs();
        if nf * nf * k.abs() <= 1e-20 * first_moment || first_moment == 0.0 {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= 4 {
            while kappa.len() > 1 && *kappa.last().unwrap() == 0.0 {
                kappa.pop();
            }
            return Ok(kappa);
        }
    }
    Err(Error::Truncation(format!("log-series of a mode polynomial did not converge within {max_order} terms")))
}

/// Coefficients `h(M)`, `M = 0..=n_max`, of `exp(Σ C_n z^n)` normalised by
/// `exp(Σ C_n)`, together with the aliasing bound of the chosen FFT length.
pub(crate) struct Spectrum {
    pub coeffs: Vec<f64>,
    pub log_mass: f64,
    pub fft_len: usize,
    pub alias_bound: f64,
}

/// `ln` of a Chernoff bound on the share of `exp(Σ C_n z^n)` beyond `m`.
fn log_alias_bound(combined: &[f64], m: usize, rate: f64) -> f64 {
    let mut best = f64::INFINITY;
    for frac in [0.25, 0.5, 0.75] {
        let s = rate * frac;
        let growth: f64 = combined.iter().enumerate().skip(1).map(|(n, &c)| c * (s * n as f64).exp_m1()).sum();
        best = best.min(growth - s * m as f64);
    }
    best
}

/// Exponentiates a combined log-series and returns its first `n_max + 1`
/// coefficients. `rate` is a lower bound on the decay rate of every
/// contributing mode and controls the aliasing estimate.
pub(crate) fn spectrum(combined: &[f64], n_max: usize, rate: f64, alias_tol: f64) -> Result<Spectrum> {
    let log_mass: f64 = combined.iter().sum();
    if combined.len() <= 1 {
        let mut coeffs = vec![0.0; n_max + 1];
        coeffs[0] = 1.0;
        return Ok(Spectrum { coeffs, log_mass, fft_len: 1, alias_bound: 0.0 });
    }
    let mut fft_len = (2 * (n_max + 1)).max(4 * combined.len()).max(64).next_power_of_two();
    let mut log_bound = log_alias_bound(combined, fft_len, rate);
    while log_bound > alias_tol.ln() {
        fft_len *= 2;
        if fft_len > 1 << 26 {
            return Err(Error::Resource("transform length exceeds 2^26".into()));
        }
        log_bound = log_alias_bound(combined, fft_len, rate);
    }
    let m = fft_len;
    // ω^k - 1 with the real part written as -2 sin²(πk/M) to avoid cancellation.
    let table: Vec<Complex64> = (0..m)
        .map(|k| {
            let half = std::f64::consts::PI * k as f64 / m as f64;
            let s = half.sin();
            Complex64::new(-2.0 * s * s, (2.0 * half).sin())
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..=m / 2 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = 0usize;
        for &c in combined.iter().skip(1) {
            idx += j;
            if idx >= m {
                idx -= m;
            }
            acc += table[idx] * c;
        }
        values[j] = acc.exp();
    }
    for j in m / 2 + 1..m {
        values[j] = values[m - j].conj();
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut values);
    let coeffs = values.iter().take(n_max + 1).map(|v| (v.re / m as f64).max(0.0)).collect();
    Ok(Spectrum { coeffs, log_mass, fft_len: m, alias_bound: log_bound.exp() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_log_series() {
        let q: f64 = 0.6;
        let b: Vec<f64> = (0..200).map(|n| q.powi(n)).collect();
        let kappa = log_series(&b, 1000).unwrap();
        for (n, k) in kappa.iter().enumerate().skip(1).take(60) {
            let want = q.powi(n as i32) / n as f64;
            assert!((k - want).abs() <= 1e-13 * want, "n={n}");
        }
    }

    #[test]
    fn two_term_polynomial() {
        // ln(1 + x z) = Σ (-1)^{n+1} x^n z^n / n
        let x: f64 = 0.3;
        let kappa = log_series(&[1.0, x], 500).unwrap();
        for (n, k) in kappa.iter().enumerate().skip(1).take(20) {
            let want = (-1f64).powi(n as i32 + 1) * x.powi(n as i32) / n as f64;
            assert!((k - want).abs() < 1e-15, "n={n}");
        }
    }

    #[test]
    fn divergent_series_is_reported() {
        // 1 + 2z has its zero inside the unit disk.
        assert!(log_series(&[1.0, 2.0], 200).is_err());
    }

    #[test]
    fn spectrum_reproduces_a_product() {
        // Three modes with weights q^n: coefficients C(M+2, 2) q^M.
        let q: f64 = 0.5;
        let b: Vec<f64> = (0..120).map(|n| q.powi(n)).collect();
        let kappa = log_series(&b, 1000).unwrap();
        let combined: Vec<f64> = kappa.iter().map(|k| 3.0 * k).collect();
        let sp = spectrum(&combined, 40, q.ln().abs(), 1e-20).unwrap();
        let norm = (1.0 - q).powi(3);
        for m in 0..=40 {
            let want = ((m + 1) * (m + 2) / 2) as f64 * q.powi(m as i32) * norm;
            assert!((sp.coeffs[m] - want).abs() < 1e-15, "M={m}: {} vs {want}", sp.coeffs[m]);
        }
        assert!(sp.alias_bound < 1e-20);
        assert!((sp.log_mass + 3.0 * (1.0 - q).ln()).abs() < 1e-14);
    }
}
