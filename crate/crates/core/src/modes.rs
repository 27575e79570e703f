//! Periodic-box dual lattice and its compression into degeneracy shells.
//!
//! The single-particle modes of a cubic box of side `L` with periodic
//! boundary conditions are `k = (2π/L) n` with `n ∈ ℤ^d`. We keep every `n`
//! with Chebyshev norm at most `n_max` (a full cube of modes) and group them
//! by `s = |n|²`, since the kinetic energy `|k|²/2m` depends on `s` only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of lattice modes a box may generate.
pub const DEFAULT_MAX_MODES: u64 = 50_000_000;

/// Geometry of a periodic cubic box together with its mode cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub dimension: usize,
    pub side_length: f64,
    pub mass: f64,
    /// Largest Chebyshev norm of the integer vector `n` in `k = (2π/L) n`.
    pub cutoff: u32,
    #[serde(default = "default_max_modes")]
    pub max_modes: u64,
}

fn default_max_modes() -> u64 {
    DEFAULT_MAX_MODES
}

impl BoxSpec {
    pub fn new(dimension: usize, side_length: f64, mass: f64, cutoff: u32) -> Result<Self> {
        let spec = Self { dimension, side_length, mass, cutoff, max_modes: DEFAULT_MAX_MODES };
        spec.validate()?;
        Ok(spec)
    }

    /// Box whose cutoff keeps every mode with `β ε_k ≤ beta_energy_cut` along
    /// the lattice axes, so that the physical cutoff stays fixed as `L` grows.
    pub fn with_thermal_cutoff(
        dimension: usize,
        side_length: f64,
        mass: f64,
        beta: f64,
        beta_energy_cut: f64,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta_energy_cut > 0.0) {
            return Err(Error::Domain(format!(
                "thermal cutoff needs beta > 0 and a positive energy cut, got {beta}, {beta_energy_cut}"
            )));
        }
        let k_cut = (2.0 * mass * beta_energy_cut / beta).sqrt();
        let n_max = (k_cut * side_length / (2.0 * std::f64::consts::PI)).ceil().max(1.0);
        Self::new(dimension, side_length, mass, n_max as u32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(self.side_length > 0.0 && self.side_length.is_finite()) {
            return Err(Error::Domain(format!("side length must be positive, got {}", self.side_length)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Domain(format!("mass must be positive, got {}", self.mass)));
        }
        if self.cutoff == 0 {
            return Err(Error::Domain("mode cutoff must be at least 1".into()));
        }
        Ok(())
    }

    /// Condensation needs `d ≥ 3`; lower dimensions are still accepted.
    pub fn is_low_dimensional(&self) -> bool {
        self.dimension < 3
    }

    pub fn volume(&self) -> f64 {
        self.side_length.powi(self.dimension as i32)
    }

    /// Spacing `2π/L` of the dual lattice.
    pub fn wavenumber_unit(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.side_length
    }

    /// `(2·n_max + 1)^d`, or `None` on overflow.
    pub fn mode_count(&self) -> Option<u64> {
        let side = 2 * self.cutoff as u64 + 1;
        let mut total: u64 = 1;
        for _ in 0..self.dimension {
            total = total.checked_mul(side)?;
        }
        Some(total)
    }

    pub fn energy_of_norm2(&self, norm2: u64) -> f64 {
        let unit = self.wavenumber_unit();
        unit * unit * norm2 as f64 / (2.0 * self.mass)
    }
}

/// One kinetic-energy level of the box together with its degeneracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeShell {
    /// `|n|²` for every lattice vector in the shell.
    pub norm2: u64,
    pub energy: f64,
    pub degeneracy: u64,
    /// Lexicographically smallest `n` with `|n|² = norm2`.
    pub representative: Vec<i64>,
}

impl ModeShell {
    /// `|k|` for the modes of this shell.
    pub fn wavenumber(&self, spec: &BoxSpec) -> f64 {
        spec.wavenumber_unit() * (self.norm2 as f64).sqrt()
    }
}

/// Counts of vectors in `{-n_max..=n_max}^j` by squared norm, for `j = 0..=d`.
fn partial_counts(dimension: usize, cutoff: u64) -> Vec<Vec<u64>> {
    let max_s = cutoff * cutoff;
    let mut one_dim = vec![0u64; (max_s + 1) as usize];
    for v in -(cutoff as i64)..=(cutoff as i64) {
        one_dim[(v * v) as usize] += 1;
    }
    let mut tables = Vec::with_capacity(dimension + 1);
    tables.push(vec![1u64]);
    for j in 1..=dimension {
        let prev = &tables[j - 1];
        let mut next = vec![0u64; prev.len() + max_s as usize];
        for (a, &ca) in prev.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            for (b, &cb) in one_dim.iter().enumerate() {
                if cb != 0 {
                    next[a + b] += ca * cb;
                }
            }
        }
        tables.push(next);
    }
    tables
}

fn representative(norm2: u64, cutoff: u64, tables: &[Vec<u64>]) -> Vec<i64> {
    let dimension = tables.len() - 1;
    let mut remaining = norm2;
    let mut out = Vec::with_capacity(dimension);
    for position in 0..dimension {
        let rest = &tables[dimension - position - 1];
        let choice = (-(cutoff as i64)..=(cutoff as i64))
            .find(|&v| {
                let sq = (v * v) as u64;
                sq <= remaining && rest.get((remaining - sq) as usize).copied().unwrap_or(0) > 0
            })
            .expect("shell norm is representable by construction");
        remaining -= (choice * choice) as u64;
        out.push(choice);
    }
    out
}

/// All degeneracy shells of the box, sorted by strictly increasing `|n|²`.
pub fn enumerate_shells(spec: &BoxSpec) -> Result<Vec<ModeShell>> {
    spec.validate()?;
    let total = spec.mode_count().filter(|&n| n <= spec.max_modes).ok_or_else(|| {
        Error::Sizing(format!(
            "box with d={} and n_max={} exceeds the mode budget of {}",
            spec.dimension, spec.cutoff, spec.max_modes
        ))
    })?;
    let cutoff = spec.cutoff as u64;
    let tables = partial_counts(spec.dimension, cutoff);
    let counts = &tables[spec.dimension];
    let shells: Vec<ModeShell> = counts
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > 0)
        .map(|(s, &g)| ModeShell {
            norm2: s as u64,
            energy: spec.energy_of_norm2(s as u64),
            degeneracy: g,
            representative: representative(s as u64, cutoff, &tables),
        })
        .collect();
    debug_assert_eq!(shells.iter().map(|s| s.degeneracy).sum::<u64>(), total);
    Ok(shells)
}

/// How a low-lying band of modes is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMode {
    /// `|k| < δ`.
    KNorm,
    /// `ε_k < δ`.
    Energy,
}

/// Indices of the shells inside the band; the `k = 0` shell is always kept.
pub fn band_shells(spec: &BoxSpec, shells: &[ModeShell], delta: f64, mode: BandMode) -> Vec<usize> {
    shells
        .iter()
        .enumerate()
        .filter(|(_, shell)| {
            shell.norm2 == 0
                || match mode {
                    BandMode::KNorm => shell.wavenumber(spec) < delta,
                    BandMode::Energy => shell.energy < delta,
                }
        })
        .map(|(i, _)| i)
        .collect()
}
