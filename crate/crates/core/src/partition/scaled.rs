//! Restricted partition functions as scaled, tilted coefficient vectors.
//!
//! A [`RestrictedPartition`] stores `Q(N)` for `N = 0..=N_max` as
//! `Q(N) = q[N] · exp(log_scale - tilt·N)`. The tilt `βα` moves the bulk of
//! the coefficients to comparable magnitudes, and the mantissas are kept
//! within a factor of two of one by exact power-of-two rescaling after every
//! product.

use crate::error::{Error, Result};

/// Mantissas below this fraction of the largest one are flushed to zero.
const FLUSH: f64 = 1e-280;

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedPartition {
    coeffs: Vec<f64>,
    log_scale: f64,
    tilt: f64,
}

impl RestrictedPartition {
    /// The empty mode set: `Q(0) = 1`.
    pub fn identity(tilt: f64) -> Self {
        Self { coeffs: vec![1.0], log_scale: 0.0, tilt }
    }

    /// Single-mode polynomial from `ln a(n)`, `n = 0..`, truncated at `n_max`.
    pub fn from_log_weights(log_weights: &[f64], tilt: f64, n_max: usize) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::InvalidRequest("empty weight sequence".into()));
        }
        let len = log_weights.len().min(n_max + 1);
        let tilted: Vec<f64> = (0..len).map(|n| log_weights[n] + tilt * n as f64).collect();
        let peak = tilted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::Scale("weights are not finite".into()));
        }
        let mut out = Self { coeffs: tilted.iter().map(|&w| (w - peak).exp()).collect(), log_scale: peak, tilt };
        out.renormalize()?;
        Ok(out)
    }

    /// Builds directly from mantissas; mostly useful in tests.
    pub fn from_coefficients(coeffs: Vec<f64>, log_scale: f64, tilt: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidRequest("coefficients must be finite and nonnegative".into()));
        }
        let mut out = Self { coeffs, log_scale, tilt };
        out.renormalize()?;
        Ok(out)
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mantissas(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn tilt(&self) -> f64 {
        self.tilt
    }

    /// `ln Q(N)`, or `-∞` when the coefficient vanishes or `N` is out of range.
    pub fn log_value(&self, n: usize) -> f64 {
        match self.coeffs.get(n) {
            Some(&c) if c > 0.0 => c.ln() + self.log_scale - self.tilt * n as f64,
            _ => f64::NEG_INFINITY,
        }
    }

    /// `Q(N)` in plain floating point; may overflow for large systems.
    pub fn value(&self, n: usize) -> f64 {
        self.log_value(n).exp()
    }

    /// Rescales by an exact power of two so the largest mantissa lies in `[1/2, 2]`.
    fn renormalize(&mut self) -> Result<()> {
        let peak = self.coeffs.iter().cloned().fold(0.0, f64::max);
        if !(peak > 0.0 && peak.is_finite()) {
            return Err(Error::Scale(format!("coefficient vector lost its scale (max {peak})")));
        }
        let exponent = peak.log2().round() as i32;
        if exponent != 0 {
            let factor = 2f64.powi(-exponent);
            for c in &mut self.coeffs {
                *c *= factor;
            }
            self.log_scale += exponent as f64 * std::f64::consts::LN_2;
        }
        let floor = FLUSH * self.coeffs.iter().cloned().fold(0.0, f64::max);
        for c in self.coeffs.iter_mut().skip(1) {
            if *c < floor {
                *c = 0.0;
            }
        }
        if !self.log_scale.is_finite() {
            return Err(Error::Scale("log scale left the representable range".into()));
        }
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        Ok(())
    }
}

/// Truncated product of two restricted partitions with equal tilt.
pub fn convolve(p: &RestrictedPartition, q: &RestrictedPartition, n_max: usize) -> Result<RestrictedPartition> {
    if (p.tilt - q.tilt).abs() > 1e-15 * p.tilt.abs().max(1.0) {
        return Err(Error::InvalidRequest(format!("cannot convolve partitions with tilts {} and {}", p.tilt, q.tilt)));
    }
    let len = (p.coeffs.len() + q.coeffs.len() - 1).min(n_max + 1);
    let mut out = vec![0.0; len];
    for (i, &a) in p.coeffs.iter().enumerate().take(len) {
        if a == 0.0 {
            continue;
        }
        let span = (len - i).min(q.coeffs.len());
        for (o, &b) in out[i..i + span].iter_mut().zip(&q.coeffs[..span]) {
            *o += a * b;
        }
    }
    let mut result = RestrictedPartition { coeffs: out, log_scale: p.log_scale + q.log_scale, tilt: p.tilt };
    result.renormalize()?;
    Ok(result)
}

/// `g`-fold product of a single-mode polynomial, by repeated squaring.
pub fn shell_power(single: &RestrictedPartition, g: u64, n_max: usize) -> Result<RestrictedPartition> {
    let mut result = RestrictedPartition::identity(single.tilt);
    if g == 0 {
        return Ok(result);
    }
    let mut base = single.clone();
    base.coeffs.truncate(n_max + 1);
    let mut exp = g;
    loop {
        if exp & 1 == 1 {
            result = convolve(&result, &base, n_max)?;
        }
        exp >>= 1;
        if exp == 0 {
            break;
        }
        base = convolve(&base, &base, n_max)?;
    }
    Ok(result)
}

/// `ln Z`, pressure and last-decile share of a grand sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrandSum {
    pub log_z: f64,
    pub pressure: f64,
    pub tail_mass: f64,
}

/// `Z = Σ_N Q(N) exp(-β(λN²/V - μN))`, where `lambda` is the coupling of the
/// total particle number (zero for the free gas).
pub fn grand_sum(q: &RestrictedPartition, beta: f64, mu: f64, lambda: f64, volume: f64) -> Result<GrandSum> {
    let terms: Vec<f64> = (0..q.coeffs.len())
        .map(|n| {
            let nf = n as f64;
            q.log_value(n) - beta * (lambda * nf * nf / volume - mu * nf)
        })
        .collect();
    let peak = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::Scale("grand sum has no finite term".into()));
    }
    let weights: Vec<f64> = terms.iter().map(|t| (t - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    let start = tail_start(q.n_max());
    let tail: f64 = weights[start.min(weights.len())..].iter().sum();
    let log_z = peak + total.ln();
    Ok(GrandSum {
        log_z,
        pressure: log_z / (beta * volume),
        tail_mass: if q.n_max() == 0 { 0.0 } else { tail / total },
    })
}

/// First index of the last decile of `0..=n_max`.
pub(crate) fn tail_start(n_max: usize) -> usize {
    if n_max == 0 {
        return 1;
    }
    ((0.9 * n_max as f64).ceil() as usize).max(1)
}
