//! Density-constrained state points, finite-size scaling and inequality audits.

mod audit;
mod crosscheck;
mod sweep;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{band_shells, enumerate_shells, BandMode, BoxSpec, ModeShell};
use crate::partition::{
    levels_from_shells, Ensemble, EnsembleMoments, ModeLevel, ModelParams, MomentRequest, TruncationOptions, Variant,
};
use crate::thermolimit::shell_density;

pub use audit::{
    audit_in1, audit_in2, audit_in3, audit_lemma4, audit_lemma5, audit_og, audit_p1_jensen, audit_pres_order,
    finite_mf_pressure, AuditId, AuditStatus, InequalityAudit, Lemma5Report, Relation,
};
pub use crosscheck::{oracle_check, toy_levels, toy_suite, OracleCheckReport, OracleRow};
pub use sweep::{
    classify, power_law_exponent, scaling_sweep, BandSeries, Classification, ClassifierThresholds, ScalingReport,
    SweepSpec,
};

/// Absolute tolerance on `⟨N⟩/V - ρ` for density-driven state points.
pub const DENSITY_TOL: f64 = 1e-9;
const SOLVE_ITERATIONS: usize = 300;

/// Particle density in a low-lying band of modes, with the infinite-volume
/// free-gas density of the same band at zero chemical potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandDensity {
    pub delta: f64,
    pub mode: BandMode,
    pub density: f64,
    pub thermal: f64,
}

impl BandDensity {
    /// Band density in excess of the thermal (uncondensed) share.
    pub fn excess(&self) -> f64 {
        self.density - self.thermal
    }
}

/// One evaluated state point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatePoint {
    pub spec: BoxSpec,
    pub params: ModelParams,
    pub moments: EnsembleMoments,
    pub density: f64,
    /// Target density when `μ` was solved for.
    pub rho_target: Option<f64>,
    pub max_mode_density: f64,
    #[serde(skip)]
    shells: Vec<ModeShell>,
    #[serde(skip)]
    ensemble: Option<Arc<Ensemble>>,
}

impl StatePoint {
    pub fn volume(&self) -> f64 {
        self.spec.volume()
    }

    pub fn shells(&self) -> &[ModeShell] {
        &self.shells
    }

    pub fn levels(&self) -> Vec<ModeLevel> {
        levels_from_shells(&self.shells)
    }

    pub fn ensemble(&self) -> Result<&Ensemble> {
        self.ensemble
            .as_deref()
            .ok_or_else(|| Error::InvalidRequest("state point was deserialized without its ensemble".into()))
    }

    pub fn pressure(&self) -> f64 {
        self.moments.pressure
    }

    /// `⟨N_0⟩/V` for the `k = 0` mode.
    pub fn ground_density(&self) -> f64 {
        self.moments.occupations[0].mean / self.volume()
    }

    pub fn band(&self, delta: f64, mode: BandMode) -> Result<BandDensity> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("band width must be positive, got {delta}")));
        }
        let density = band_shells(&self.spec, &self.shells, delta, mode)
            .into_iter()
            .map(|i| self.shells[i].degeneracy as f64 * self.moments.occupations[i].mean)
            .sum::<f64>()
            / self.volume();
        let k_hi = match mode {
            BandMode::KNorm => delta,
            BandMode::Energy => (2.0 * self.spec.mass * delta).sqrt(),
        };
        let thermal = shell_density(0.0, k_hi, 0.0, self.params.beta, self.spec.mass, self.spec.dimension)?;
        Ok(BandDensity { delta, mode, density, thermal })
    }

    /// A short stable identifier used in reports.
    pub fn key(&self) -> String {
        format!(
            "{}:L={}:beta={:.6}:mu={:.9}",
            self.params.variant.name(),
            self.spec.side_length,
            self.params.beta,
            self.params.mu
        )
    }
}

/// Evaluates the ensemble at a given chemical potential.
pub fn evaluate(spec: &BoxSpec, params: &ModelParams, options: &TruncationOptions) -> Result<StatePoint> {
    let shells = enumerate_shells(spec)?;
    let levels = levels_from_shells(&shells);
    let ens = Ensemble::build(&levels, params, spec.volume(), options)?;
    assemble(spec, params, shells, ens, None)
}

fn assemble(
    spec: &BoxSpec,
    params: &ModelParams,
    shells: Vec<ModeShell>,
    ens: Ensemble,
    rho_target: Option<f64>,
) -> Result<StatePoint> {
    let moments = ens.moments(&MomentRequest::default())?;
    let volume = spec.volume();
    let max_mode_density = moments.occupations.iter().map(|o| o.mean).fold(0.0, f64::max) / volume;
    Ok(StatePoint {
        spec: spec.clone(),
        params: *params,
        density: moments.mean_n / volume,
        moments,
        rho_target,
        max_mode_density,
        shells,
        ensemble: Some(Arc::new(ens)),
    })
}

/// Finds `μ` with `⟨N⟩/V = ρ` by a bracketed, safeguarded Newton iteration
/// (`d⟨N⟩/dμ = β Var N > 0`).
pub fn solve_mu(
    spec: &BoxSpec,
    variant: Variant,
    lambda: f64,
    beta: f64,
    rho: f64,
    options: &TruncationOptions,
) -> Result<StatePoint> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain(format!("target density must be positive, got {rho}")));
    }
    let shells = enumerate_shells(spec)?;
    let levels = levels_from_shells(&shells);
    let volume = spec.volume();
    let base = ModelParams::new(variant, lambda, beta, 0.0)?;
    let eval = |mu: f64| -> Result<(f64, f64, Ensemble)> {
        let ens = Ensemble::build(&levels, &base.with_mu(mu), volume, options)?;
        let residual = ens.mean_n() / volume - rho;
        let slope = beta * ens.var_n() / volume;
        Ok((residual, slope, ens))
    };

    // Bracket the root.
    let (mut lo, mut hi) = match variant {
        Variant::Free => {
            let top = levels.iter().map(|l| l.energy).fold(f64::INFINITY, f64::min);
            let mut gap = 1.0;
            let mut lo = top - gap;
            let mut hi = top - gap;
            if eval(lo)?.0 > 0.0 {
                while eval(lo)?.0 > 0.0 {
                    gap *= 2.0;
                    lo = top - gap;
                    if gap > 1e12 {
                        return Err(Error::Bracket("density too low to bracket mu".into()));
                    }
                }
            } else {
                while eval(hi)?.0 <= 0.0 {
                    gap /= 4.0;
                    hi = top - gap;
                    if gap < 1e-15 {
                        return Err(Error::Bracket("density too high to bracket mu".into()));
                    }
                }
            }
            (lo, hi)
        }
        _ => {
            let guess = 2.0 * lambda * rho;
            let mut width = 1.0;
            let mut lo = guess - width;
            while eval(lo)?.0 > 0.0 {
                width *= 2.0;
                lo = guess - width;
                if width > 1e12 {
                    return Err(Error::Bracket("could not bracket mu from below".into()));
                }
            }
            width = 1.0;
            let mut hi = guess + width;
            while eval(hi)?.0 <= 0.0 {
                width *= 2.0;
                hi = guess + width;
                if width > 1e12 {
                    return Err(Error::Bracket("could not bracket mu from above".into()));
                }
            }
            (lo, hi)
        }
    };

    let mut mu = 0.5 * (lo + hi);
    for _ in 0..SOLVE_ITERATIONS {
        let (residual, slope, ens) = eval(mu)?;
        if residual.abs() <= DENSITY_TOL {
            if !(slope > 0.0) {
                return Err(Error::Domain(format!("particle number is not increasing in mu at {mu}")));
            }
            let params = base.with_mu(mu);
            return assemble(spec, &params, shells, ens, Some(rho));
        }
        if residual > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        let newton = mu - residual / slope;
        mu = if newton > lo && newton < hi && slope > 0.0 { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * mu.abs().max(1e-300) {
            return Err(Error::Bracket(format!("mu bracket collapsed at {mu} with density residual {residual:e}")));
        }
    }
    Err(Error::Bracket("mu iteration did not converge".into()))
}
