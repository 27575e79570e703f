//! The uncapped free gas factorises into independent geometric modes.

use crate::error::{Error, Result};

use super::{ModeLevel, Occupation};

#[derive(Debug, Clone)]
pub(crate) struct FreeClosedForm {
    pub log_z: f64,
    pub mean_n: f64,
    pub var_n: f64,
    pub means: Vec<f64>,
}

impl FreeClosedForm {
    pub fn new(levels: &[ModeLevel], beta: f64, mu: f64) -> Result<Self> {
        let mut log_z = 0.0;
        let mut mean_n = 0.0;
        let mut var_n = 0.0;
        let mut means = Vec::with_capacity(levels.len());
        for level in levels {
            let x = beta * (level.energy - mu);
            if !(x > 0.0) {
                return Err(Error::Domain(format!(
                    "free gas needs mu below every mode energy (mu = {mu}, energy = {})",
                    level.energy
                )));
            }
            let g = level.degeneracy as f64;
            let n = 1.0 / x.exp_m1();
            log_z -= g * (-(-x).exp_m1()).ln();
            mean_n += g * n;
            var_n += g * n * (n + 1.0);
            means.push(n);
        }
        Ok(Self { log_z, mean_n, var_n, means })
    }

    pub fn occupation(&self, level: usize) -> Occupation {
        let n = self.means[level];
        Occupation { mean: n, second: n * (2.0 * n + 1.0) }
    }

    pub fn pair(&self, j: usize, k: usize) -> f64 {
        self.means[j] * self.means[k]
    }

    pub fn with_total(&self, j: usize) -> f64 {
        let n = self.means[j];
        n * (2.0 * n + 1.0) + n * (self.mean_n - n)
    }
}
