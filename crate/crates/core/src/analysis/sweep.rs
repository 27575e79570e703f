//! Finite-size scaling at fixed density and the condensation classifier.
//!
//! The infinite-volume notions are replaced by trends over a volume ladder:
//!
//! * ground-state: `⟨N_0⟩/V` at the largest box exceeds the density floor and
//!   its fitted power-law exponent is not below the exponent cut;
//! * generalized: the band density in excess of the free thermal band density
//!   (`δ_min`) exceeds the floor at the largest box and is not decaying;
//! * non-extensive: generalized, while `⟨N_0⟩/V` strictly decreases along the
//!   ladder with a fitted exponent below the cut.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_mu, BandDensity, StatePoint};
use crate::error::{Error, Result};
use crate::modes::{BandMode, BoxSpec};
use crate::partition::{TruncationOptions, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    None,
    GroundState,
    Generalized,
    NonExtensive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierThresholds {
    pub density_floor: f64,
    pub exponent_cut: f64,
    /// Number of largest volumes used in the power-law fits.
    pub fit_points: usize,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self { density_floor: 1e-3, exponent_cut: -0.2, fit_points: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variant: Variant,
    pub sides: Vec<f64>,
    pub rho: f64,
    pub beta: f64,
    pub lambda: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Modes with `βε` beyond this value along the lattice axes are dropped.
    #[serde(default = "default_energy_cut")]
    pub energy_cut: f64,
    pub deltas: Vec<f64>,
    #[serde(default = "default_band_mode")]
    pub band_mode: BandMode,
    #[serde(default)]
    pub thresholds: ClassifierThresholds,
}

fn default_mass() -> f64 {
    1.0
}
fn default_dimension() -> usize {
    3
}
fn default_energy_cut() -> f64 {
    30.0
}
fn default_band_mode() -> BandMode {
    BandMode::KNorm
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sides.len() < 2 || self.sides.windows(2).any(|w| !(w[1] > w[0])) || !(self.sides[0] > 0.0) {
            return Err(Error::InvalidRequest("side lengths must be positive and strictly increasing".into()));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidRequest("band widths must be positive".into()));
        }
        if !(self.rho > 0.0 && self.beta > 0.0 && self.mass > 0.0 && self.energy_cut > 0.0) {
            return Err(Error::Domain("rho, beta, mass and energy_cut must be positive".into()));
        }
        if self.thresholds.fit_points < 2 {
            return Err(Error::InvalidRequest("fits need at least two volumes".into()));
        }
        Ok(())
    }

    pub fn box_for(&self, side: f64) -> Result<BoxSpec> {
        BoxSpec::with_thermal_cutoff(self.dimension, side, self.mass, self.beta, self.energy_cut)
    }

    fn delta_min(&self) -> f64 {
        self.deltas.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSeries {
    pub delta: f64,
    pub mode: BandMode,
    pub density: Vec<f64>,
    /// Infinite-volume free-gas band density at zero chemical potential.
    pub thermal: f64,
    pub excess_exponent: f64,
}

impl BandSeries {
    pub fn excess(&self) -> Vec<f64> {
        self.density.iter().map(|d| d - self.thermal).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub spec: SweepSpec,
    pub points: Vec<StatePoint>,
    pub volumes: Vec<f64>,
    pub mu: Vec<f64>,
    /// `⟨N_0⟩/V`.
    pub ground: Vec<f64>,
    pub bands: Vec<BandSeries>,
    pub max_mode: Vec<f64>,
    pub ground_exponent: f64,
    pub classification: Classification,
}

impl ScalingReport {
    pub fn band(&self, delta: f64) -> Option<&BandSeries> {
        self.bands.iter().find(|b| b.delta == delta)
    }
}

/// Least-squares slope of `ln y` against `ln x`; NaN if any `y ≤ 0`.
pub fn power_law_exponent(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 || y.iter().any(|v| !(*v > 0.0)) {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn tail<T>(v: &[T], n: usize) -> &[T] {
    &v[v.len().saturating_sub(n)..]
}

/// Applies the finite-volume classification rules.
pub fn classify(
    volumes: &[f64],
    ground: &[f64],
    band_excess: &[f64],
    thresholds: &ClassifierThresholds,
) -> Classification {
    let k = thresholds.fit_points;
    let floor = thresholds.density_floor;
    let cut = thresholds.exponent_cut;
    let ground_exp = power_law_exponent(tail(volumes, k), tail(ground, k));
    let excess_exp = power_law_exponent(tail(volumes, k), tail(band_excess, k));
    let last = |v: &[f64]| v.last().copied().unwrap_or(0.0);
    let ground_state = last(ground) > floor && ground_exp >= cut;
    let generalized = last(band_excess) > floor && excess_exp >= cut;
    let decreasing = ground.windows(2).all(|w| w[1] < w[0]);
    if generalized && decreasing && ground_exp < cut {
        Classification::NonExtensive
    } else if ground_state {
        Classification::GroundState
    } else if generalized {
        Classification::Generalized
    } else {
        Classification::None
    }
}

/// Solves for `μ` at every box size (in parallel) and assembles the series.
pub fn scaling_sweep(spec: &SweepSpec, options: &TruncationOptions) -> Result<ScalingReport> {
    spec.validate()?;
    let points = spec
        .sides
        .par_iter()
        .map(|&side| {
            let b = spec.box_for(side)?;
            solve_mu(&b, spec.variant, spec.lambda, spec.beta, spec.rho, options).map_err(|e| match e {
                Error::Truncation(msg) | Error::Resource(msg) => {
                    Error::Resource(format!("state point at L = {side} could not be certified: {msg}"))
                }
                other => other,
            })
        })
        .collect::<Result<Vec<StatePoint>>>()?;
    let volumes: Vec<f64> = points.iter().map(|p| p.volume()).collect();
    let ground: Vec<f64> = points.iter().map(|p| p.ground_density()).collect();
    let k = spec.thresholds.fit_points;
    let mut bands = Vec::with_capacity(spec.deltas.len());
    for &delta in &spec.deltas {
        let per_point: Vec<BandDensity> =
            points.iter().map(|p| p.band(delta, spec.band_mode)).collect::<Result<_>>()?;
        let density: Vec<f64> = per_point.iter().map(|b| b.density).collect();
        let thermal = per_point[0].thermal;
        let excess: Vec<f64> = density.iter().map(|d| d - thermal).collect();
        bands.push(BandSeries {
            delta,
            mode: spec.band_mode,
            density,
            thermal,
            excess_exponent: power_law_exponent(tail(&volumes, k), tail(&excess, k)),
        });
    }
    let delta_min = spec.delta_min();
    let excess = bands.iter().find(|b| b.delta == delta_min).expect("delta_min is listed").excess();
    let classification = classify(&volumes, &ground, &excess, &spec.thresholds);
    Ok(ScalingReport {
        spec: spec.clone(),
        mu: points.iter().map(|p| p.params.mu).collect(),
        max_mode: points.iter().map(|p| p.max_mode_density).collect(),
        ground_exponent: power_law_exponent(tail(&volumes, k), tail(&ground, k)),
        points,
        volumes,
        ground,
        bands,
        classification,
    })
}
