//! Transfer engine versus exhaustive enumeration on toy systems.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::{enumerate_exact, ToySystem};
use crate::partition::{Ensemble, ModeLevel, ModelParams, TruncationOptions, Variant};

/// Groups equal energies into capped levels, in order of first appearance.
/// Returns the levels and the level index of every mode.
pub fn toy_levels(sys: &ToySystem) -> (Vec<ModeLevel>, Vec<usize>) {
    let mut levels: Vec<ModeLevel> = Vec::new();
    let mut index = Vec::with_capacity(sys.energies.len());
    for &e in &sys.energies {
        match levels.iter().position(|l| l.energy == e) {
            Some(i) => {
                levels[i].degeneracy += 1;
                index.push(i);
            }
            None => {
                index.push(levels.len());
                levels.push(ModeLevel { energy: e, degeneracy: 1, cap: Some(sys.cap) });
            }
        }
    }
    (levels, index)
}

/// Eleven small systems across the three variants, each with at most four
/// distinct energies.
pub fn toy_suite() -> Vec<(String, ToySystem)> {
    let sys = |energies: &[f64], cap, variant, lambda, beta, mu, volume| ToySystem {
        energies: energies.to_vec(),
        cap,
        params: ModelParams { variant, lambda, beta, mu },
        volume,
    };
    use Variant::*;
    vec![
        ("free-single".into(), sys(&[0.5], 6, Free, 0.0, 1.0, -0.2, 1.0)),
        ("free-three".into(), sys(&[0.0, 0.4, 0.4], 6, Free, 0.0, 1.3, -0.1, 2.0)),
        ("free-positive-mu".into(), sys(&[0.0, 0.2, 0.2, 0.9], 5, Free, 0.0, 0.7, 0.3, 1.0)),
        ("mf-two".into(), sys(&[0.0, 0.3], 6, MeanField, 0.5, 1.0, 0.4, 1.0)),
        ("mf-shells".into(), sys(&[0.0, 0.5, 0.5, 0.5, 1.0], 4, MeanField, 1.0, 0.8, 1.2, 3.0)),
        ("mf-hot".into(), sys(&[0.1, 0.2, 0.3, 0.4], 6, MeanField, 0.2, 0.3, -0.5, 2.0)),
        ("ne-fixture".into(), sys(&[0.0, 1.0, 1.0], 5, NonExtensive, 0.2, 1.0, 0.1, 1.0)),
        ("ne-dense".into(), sys(&[0.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1], 6, NonExtensive, 0.5, 1.0, 2.0, 4.0)),
        ("ne-four-shells".into(), sys(&[0.0, 0.2, 0.2, 0.4, 0.4, 0.7], 5, NonExtensive, 0.8, 1.5, 0.6, 2.0)),
        ("ne-cold".into(), sys(&[0.0, 0.05, 0.05, 0.05], 6, NonExtensive, 0.3, 3.0, 0.4, 1.5)),
        ("ne-weak".into(), sys(&[0.0, 0.3, 0.6], 6, NonExtensive, 0.01, 1.0, -0.3, 1.0)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub name: String,
    pub variant: Variant,
    pub modes: usize,
    pub log_z_deviation: f64,
    /// Largest relative deviation over `log Z` and every moment.
    pub max_deviation: f64,
    /// Share of the grand sum in the top decile of particle numbers; large
    /// values mean the occupation cap shapes the toy's physics.
    pub cap_pressure: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckReport {
    pub rows: Vec<OracleRow>,
    pub max_deviation: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1e-300)
    }
}

/// Compares every moment the engine exposes against the enumeration.
pub fn oracle_check(suite: &[(String, ToySystem)], cap_flag: f64) -> Result<OracleCheckReport> {
    let options = TruncationOptions::default();
    let mut rows = Vec::with_capacity(suite.len());
    for (name, sys) in suite {
        let exact = enumerate_exact(sys)?;
        let (levels, index) = toy_levels(sys);
        let ens = Ensemble::build(&levels, &sys.params, sys.volume, &options)?;
        let log_z_deviation = rel(ens.log_z(), exact.log_z);
        let mut worst = log_z_deviation;
        worst = worst.max(rel(ens.mean_n(), exact.mean_n));
        worst = worst.max(rel(ens.second_moment_n(), exact.second_n));
        let modes = sys.energies.len();
        for a in 0..modes {
            let la = index[a];
            let occ = ens.occupation(la)?;
            worst = worst.max(rel(occ.mean, exact.means[a]));
            worst = worst.max(rel(occ.second, exact.products[a][a]));
            worst = worst.max(rel(ens.with_total(la)?, exact.with_total[a]));
            for b in a + 1..modes {
                worst = worst.max(rel(ens.pair(la, index[b])?, exact.products[a][b]));
            }
        }
        let cap_pressure = ens.tail_mass();
        rows.push(OracleRow {
            name: name.clone(),
            variant: sys.params.variant,
            modes,
            log_z_deviation,
            max_deviation: worst,
            cap_pressure,
            flagged: cap_pressure > cap_flag,
        });
    }
    let max_deviation = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    Ok(OracleCheckReport { rows, max_deviation })
}
