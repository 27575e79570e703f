//! Exact finite-volume grand-canonical ensembles of the diagonal models.
//!
//! All three models share per-mode factors `a_k(n) = exp(-β(ε_k n + λ_m n²/2V))`
//! and a global factor `G(N) = exp(-β(λ_c N²/V - μN))` of the total number:
//!
//! | variant        | `λ_m` | `λ_c` |
//! |----------------|-------|-------|
//! | `Free`         | 0     | 0     |
//! | `MeanField`    | 0     | λ     |
//! | `NonExtensive` | λ     | λ     |
//!
//! `Z = Σ_N Q(N) G(N)`, where `Q` is the product of the per-mode generating
//! polynomials restricted to `N` particles.

mod closed;
mod ensemble;
mod logseries;
mod scaled;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::ModeShell;

pub use ensemble::{EngineKind, Ensemble};
pub use scaled::{convolve, grand_sum, shell_power, GrandSum, RestrictedPartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Free,
    MeanField,
    NonExtensive,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Free => "free",
            Variant::MeanField => "mean_field",
            Variant::NonExtensive => "non_extensive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub variant: Variant,
    /// Coupling in energy·volume units; ignored by the free gas.
    pub lambda: f64,
    pub beta: f64,
    pub mu: f64,
}

impl ModelParams {
    pub fn new(variant: Variant, lambda: f64, beta: f64, mu: f64) -> Result<Self> {
        let p = Self { variant, lambda, beta, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!("beta must be positive, got {}", self.beta)));
        }
        if !self.mu.is_finite() {
            return Err(Error::Domain(format!("mu must be finite, got {}", self.mu)));
        }
        if self.variant != Variant::Free && !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    pub fn couplings(&self) -> Couplings {
        match self.variant {
            Variant::Free => Couplings { mode: 0.0, total: 0.0 },
            Variant::MeanField => Couplings { mode: 0.0, total: self.lambda },
            Variant::NonExtensive => Couplings { mode: self.lambda, total: self.lambda },
        }
    }
}

/// `λ_m` (per-mode `n²/2V` term) and `λ_c` (global `N²/V` term).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub mode: f64,
    pub total: f64,
}

/// A set of degenerate modes sharing one energy, optionally with an explicit
/// occupation cap (toy systems); uncapped levels are truncated adaptively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeLevel {
    pub energy: f64,
    pub degeneracy: u64,
    pub cap: Option<usize>,
}

pub fn levels_from_shells(shells: &[ModeShell]) -> Vec<ModeLevel> {
    shells.iter().map(|s| ModeLevel { energy: s.energy, degeneracy: s.degeneracy, cap: None }).collect()
}

/// Per-mode weights `a(n)` for `n = 0..=n_cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeWeights {
    pub values: Vec<f64>,
    /// `a(n_cap) / max a ≤ 1e-18`.
    pub adequate: bool,
}

pub fn mode_weights(energy: f64, params: &ModelParams, volume: f64, n_cap: usize) -> Result<ModeWeights> {
    params.validate()?;
    if n_cap == 0 {
        return Err(Error::InvalidRequest("n_cap must be at least 1".into()));
    }
    let lm = params.couplings().mode;
    if energy <= 0.0 && lm == 0.0 {
        return Err(Error::Truncation("weights of a zero-energy mode without the n² term do not decay".into()));
    }
    let values: Vec<f64> = (0..=n_cap)
        .map(|n| {
            let nf = n as f64;
            (-params.beta * (energy * nf + lm * nf * nf / (2.0 * volume))).exp()
        })
        .collect();
    let peak = values.iter().cloned().fold(0.0, f64::max);
    Ok(ModeWeights { adequate: values[n_cap] <= 1e-18 * peak, values })
}

/// Which algorithm evaluates the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    /// Closed form for the uncapped free gas, otherwise the hybrid engine.
    Auto,
    /// Coefficient-space products for every mode; reference for the hybrid.
    Direct,
    /// Hybrid engine even for the free gas.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationOptions {
    /// Largest admitted share of `Z` in the last decile of `0..=N_max`.
    pub tol: f64,
    /// Per-mode adequacy: last kept weight relative to the largest.
    pub weight_floor: f64,
    /// Resource cap on `N_max`.
    pub max_particles: usize,
    pub engine: EngineChoice,
    /// Modes with `β(ε - α) ≥ split_gap` go to the transform path.
    pub split_gap: f64,
}

impl Default for TruncationOptions {
    fn default() -> Self {
        Self { tol: 1e-12, weight_floor: 1e-18, max_particles: 1 << 21, engine: EngineChoice::Auto, split_gap: 0.1 }
    }
}

/// Per-mode occupation moments of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    pub mean: f64,
    pub second: f64,
}

/// Cross moments to compute in addition to the per-level occupations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentRequest {
    /// `⟨N_j N_k⟩` for a mode of level `j` and a different mode of level `k`.
    pub pairs: Vec<(usize, usize)>,
    /// `⟨N N_j⟩` for a mode of level `j`.
    pub with_total: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMoments {
    pub log_z: f64,
    pub pressure: f64,
    pub mean_n: f64,
    pub var_n: f64,
    /// Per mode, indexed by level.
    pub occupations: Vec<Occupation>,
    pub pairs: Vec<((usize, usize), f64)>,
    pub with_total: Vec<(usize, f64)>,
    pub tail_mass: f64,
    pub n_max: usize,
    pub engine: EngineKind,
}

impl EnsembleMoments {
    /// `|Σ_levels g·⟨N_k⟩ - ⟨N⟩| / ⟨N⟩`.
    pub fn occupation_sum_residual(&self, levels: &[ModeLevel]) -> f64 {
        let sum: f64 = levels.iter().zip(&self.occupations).map(|(l, o)| l.degeneracy as f64 * o.mean).sum();
        (sum - self.mean_n).abs() / self.mean_n.abs().max(1e-300)
    }

    pub fn pair(&self, j: usize, k: usize) -> Option<f64> {
        self.pairs.iter().find(|((a, b), _)| (*a == j && *b == k) || (*a == k && *b == j)).map(|(_, v)| *v)
    }

    pub fn total_with(&self, j: usize) -> Option<f64> {
        self.with_total.iter().find(|(a, _)| *a == j).map(|(_, v)| *v)
    }
}

/// Evaluates the ensemble and every requested moment.
pub fn moments(
    levels: &[ModeLevel],
    params: &ModelParams,
    volume: f64,
    request: &MomentRequest,
    options: &TruncationOptions,
) -> Result<EnsembleMoments> {
    let ens = Ensemble::build(levels, params, volume, options)?;
    ens.moments(request)
}

/// Certified truncation sizes `(largest per-mode cap, N_max)`.
pub fn adaptive_truncation(
    levels: &[ModeLevel],
    params: &ModelParams,
    volume: f64,
    tol: f64,
) -> Result<(usize, usize)> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::Domain(format!("truncation tolerance must lie in (0, 1e-6], got {tol}")));
    }
    let options = TruncationOptions { tol, engine: EngineChoice::Hybrid, ..TruncationOptions::default() };
    let ens = Ensemble::build(levels, params, volume, &options)?;
    Ok((ens.max_cap(), ens.n_max()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        // βλ/2V = 1 at ε = 0.
        let p = ModelParams::new(Variant::NonExtensive, 2.0, 1.0, 0.0).unwrap();
        let w = mode_weights(0.0, &p, 1.0, 4).unwrap();
        assert!((w.values[2] - (-4.0f64).exp()).abs() < 1e-16);
        let p = ModelParams::new(Variant::MeanField, 1.0, 1.0, 0.0).unwrap();
        let w = mode_weights(2f64.ln(), &p, 1.0, 70).unwrap();
        assert!((w.values[3] - 0.125).abs() < 1e-16);
        assert!(w.adequate);
        let p = ModelParams::new(Variant::NonExtensive, 0.2, 1.0, 0.0).unwrap();
        let w = mode_weights(1.0, &p, 1.0, 3).unwrap();
        assert!((w.values[1] - (-1.1f64).exp()).abs() < 1e-16);
        assert!(!w.adequate);
        let free = ModelParams::new(Variant::Free, 0.0, 1.0, -1.0).unwrap();
        assert!(matches!(mode_weights(0.0, &free, 1.0, 3), Err(Error::Truncation(_))));
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(Variant::NonExtensive, -1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(Variant::NonExtensive, 1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(Variant::Free, -1.0, 1.0, -1.0).is_ok());
    }
}
