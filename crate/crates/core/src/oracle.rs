//! Exhaustive enumeration of occupation configurations for tiny systems.
//!
//! This is the ground truth the transfer engine is tested against, so it is
//! deliberately naive: every configuration is visited in odometer order, the
//! energy is assembled from the Hamiltonian of the chosen variant, and every
//! sum is compensated. It shares only type definitions with `partition`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{ModelParams, Variant};

pub const MAX_MODES: usize = 8;
pub const MAX_CAP: usize = 60;
pub const CONFIG_BUDGET: u64 = 10_000_000;

/// An explicit list of modes, each admitting `0..=cap` particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySystem {
    pub energies: Vec<f64>,
    pub cap: usize,
    pub params: ModelParams,
    pub volume: f64,
}

impl ToySystem {
    pub fn configuration_count(&self) -> u64 {
        (self.cap as u64 + 1).saturating_pow(self.energies.len() as u32)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.energies.is_empty() || self.energies.len() > MAX_MODES {
            return Err(Error::InvalidRequest(format!(
                "toy systems hold 1..={MAX_MODES} modes, got {}",
                self.energies.len()
            )));
        }
        if self.cap == 0 || self.cap > MAX_CAP {
            return Err(Error::InvalidRequest(format!("cap must lie in 1..={MAX_CAP}, got {}", self.cap)));
        }
        if !(self.volume > 0.0 && self.volume.is_finite()) || self.energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain("volume and energies must be finite, volume positive".into()));
        }
        if self.configuration_count() > CONFIG_BUDGET {
            return Err(Error::Resource(format!(
                "{} configurations exceed the budget of {CONFIG_BUDGET}",
                self.configuration_count()
            )));
        }
        Ok(())
    }

    /// `H(n) - μN` for one configuration.
    fn energy(&self, occ: &[usize]) -> f64 {
        let p = &self.params;
        let total: usize = occ.iter().sum();
        let n = total as f64;
        let kinetic: f64 = occ.iter().zip(&self.energies).map(|(&k, e)| e * k as f64).sum();
        let squares: f64 = occ.iter().map(|&k| (k * k) as f64).sum();
        let interaction = match p.variant {
            Variant::Free => 0.0,
            Variant::MeanField => p.lambda * n * n / self.volume,
            Variant::NonExtensive => p.lambda / self.volume * (n * n + 0.5 * squares),
        };
        kinetic + interaction - p.mu * n
    }
}

/// Every first and second moment of a toy system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMoments {
    pub log_z: f64,
    pub mean_n: f64,
    pub second_n: f64,
    /// `⟨N_k⟩` per mode.
    pub means: Vec<f64>,
    /// `⟨N_j N_k⟩`, including `⟨N_k²⟩` on the diagonal.
    pub products: Vec<Vec<f64>>,
    /// `⟨N N_k⟩`.
    pub with_total: Vec<f64>,
}

impl ExactMoments {
    pub fn var_n(&self) -> f64 {
        self.second_n - self.mean_n * self.mean_n
    }
}

/// Neumaier summation.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Advances `occ` to the next configuration; returns false after the last.
fn advance(occ: &mut [usize], cap: usize) -> bool {
    for slot in occ.iter_mut() {
        if *slot < cap {
            *slot += 1;
            return true;
        }
        *slot = 0;
    }
    false
}

pub fn enumerate_exact(sys: &ToySystem) -> Result<ExactMoments> {
    sys.validate()?;
    let modes = sys.energies.len();
    let beta = sys.params.beta;

    // First pass: the smallest energy fixes the scale of the weights.
    let mut occ = vec![0usize; modes];
    let mut lowest = f64::INFINITY;
    loop {
        lowest = lowest.min(sys.energy(&occ));
        if !advance(&mut occ, sys.cap) {
            break;
        }
    }

    let mut z = Compensated::default();
    let mut n1 = Compensated::default();
    let mut n2 = Compensated::default();
    let mut means = vec![Compensated::default(); modes];
    let mut products = vec![vec![Compensated::default(); modes]; modes];
    let mut with_total = vec![Compensated::default(); modes];
    occ.iter_mut().for_each(|o| *o = 0);
    loop {
        let w = (-beta * (sys.energy(&occ) - lowest)).exp();
        let total = occ.iter().sum::<usize>() as f64;
        z.add(w);
        n1.add(w * total);
        n2.add(w * total * total);
        for j in 0..modes {
            let nj = occ[j] as f64;
            means[j].add(w * nj);
            with_total[j].add(w * nj * total);
            for k in j..modes {
                products[j][k].add(w * nj * occ[k] as f64);
            }
        }
        if !advance(&mut occ, sys.cap) {
            break;
        }
    }
    let zv = z.value();
    let mut table = vec![vec![0.0; modes]; modes];
    for j in 0..modes {
        for k in j..modes {
            let v = products[j][k].value() / zv;
            table[j][k] = v;
            table[k][j] = v;
        }
    }
    Ok(ExactMoments {
        log_z: zv.ln() - beta * lowest,
        mean_n: n1.value() / zv,
        second_n: n2.value() / zv,
        means: means.iter().map(|m| m.value() / zv).collect(),
        products: table,
        with_total: with_total.iter().map(|m| m.value() / zv).collect(),
    })
}

/// A frozen oracle output kept under version control for regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub name: String,
    pub system: ToySystem,
    pub log_z: f64,
    pub mean_n0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub entries: Vec<FixtureEntry>,
}

impl Fixture {
    pub fn record(named: &[(&str, ToySystem)]) -> Result<Self> {
        let entries = named
            .iter()
            .map(|(name, system)| {
                let m = enumerate_exact(system)?;
                Ok(FixtureEntry { name: name.to_string(), system: system.clone(), log_z: m.log_z, mean_n0: m.means[0] })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidRequest(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidRequest(format!("bad fixture {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("fixture serializes");
        std::fs::write(path, text + "\n")
            .map_err(|e| Error::InvalidRequest(format!("cannot write {}: {e}", path.display())))
    }
}

/// The 3-mode regression system: `ε = 0, 1, 1`, `βλ/V = 0.2`, `βμ = 0.1`, cap 5.
pub fn regression_system() -> ToySystem {
    ToySystem {
        energies: vec![0.0, 1.0, 1.0],
        cap: 5,
        params: ModelParams { variant: Variant::NonExtensive, lambda: 0.2, beta: 1.0, mu: 0.1 },
        volume: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(energies: Vec<f64>, cap: usize, variant: Variant, lambda: f64, beta: f64, mu: f64) -> ToySystem {
        ToySystem { energies, cap, params: ModelParams { variant, lambda, beta, mu }, volume: 1.0 }
    }

    #[test]
    fn geometric_single_mode() {
        let m = enumerate_exact(&toy(vec![0.0], 60, Variant::Free, 0.0, 1.0, -(2f64.ln()))).unwrap();
        assert!((m.log_z - 2f64.ln()).abs() < 1e-15);
        assert!((m.mean_n - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_modes_agree() {
        let m = enumerate_exact(&toy(vec![0.3, 0.3], 6, Variant::NonExtensive, 0.4, 1.2, 0.5)).unwrap();
        assert_eq!(m.means[0], m.means[1]);
        assert!((m.products[0][0] - m.products[1][1]).abs() < 1e-15);
    }

    #[test]
    fn zero_coupling_reduces_to_free() {
        let a = enumerate_exact(&toy(vec![0.1, 0.5, 0.9], 6, Variant::NonExtensive, 0.0, 1.0, -0.2)).unwrap();
        let b = enumerate_exact(&toy(vec![0.1, 0.5, 0.9], 6, Variant::Free, 0.0, 1.0, -0.2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chemical_potential_raises_the_number() {
        let mut prev = 0.0;
        for mu in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let m = enumerate_exact(&toy(vec![0.0, 0.4, 0.4], 5, Variant::MeanField, 0.3, 1.0, mu)).unwrap();
            assert!(m.mean_n > prev);
            prev = m.mean_n;
        }
    }

    #[test]
    fn permuting_degenerate_modes_changes_nothing() {
        let a = enumerate_exact(&toy(vec![0.2, 0.7, 0.7, 1.0], 4, Variant::NonExtensive, 0.5, 0.8, 0.3)).unwrap();
        let b = enumerate_exact(&toy(vec![0.7, 0.2, 1.0, 0.7], 4, Variant::NonExtensive, 0.5, 0.8, 0.3)).unwrap();
        assert!((a.log_z - b.log_z).abs() < 1e-13);
        assert!((a.mean_n - b.mean_n).abs() < 1e-13);
        assert!((a.means[0] - b.means[1]).abs() < 1e-13);
    }

    #[test]
    fn budget_is_enforced() {
        let sys = toy(vec![0.0; 8], 7, Variant::Free, 0.0, 1.0, -1.0);
        assert!(matches!(enumerate_exact(&sys), Err(Error::Resource(_))));
    }
}
