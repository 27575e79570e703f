//! Numerical audits of the correlation and variational inequalities.
//!
//! Each audit evaluates both sides of one inequality at a state point and
//! reports the margin by which it holds. Occupation-level inequalities are
//! stated for the non-extensive Hamiltonian; the free gas is its `λ = 0` case.

use serde::{Deserialize, Serialize};

use super::sweep::power_law_exponent;
use super::StatePoint;
use crate::error::{Error, Result};
use crate::partition::{Couplings, Ensemble, ModelParams, TruncationOptions, Variant};
use crate::quad::integrate;

/// Relative slack granted to exact inequalities for round-off.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AuditId {
    #[serde(rename = "og")]
    Og,
    #[serde(rename = "in1")]
    In1,
    #[serde(rename = "in2")]
    In2,
    #[serde(rename = "in3")]
    In3,
    #[serde(rename = "lemma4")]
    Lemma4,
    #[serde(rename = "lemma5")]
    Lemma5,
    #[serde(rename = "p1-jensen")]
    P1Jensen,
    #[serde(rename = "pres-order")]
    PresOrder,
}

impl AuditId {
    pub fn name(self) -> &'static str {
        match self {
            AuditId::Og => "og",
            AuditId::In1 => "in1",
            AuditId::In2 => "in2",
            AuditId::In3 => "in3",
            AuditId::Lemma4 => "lemma4",
            AuditId::Lemma5 => "lemma5",
            AuditId::P1Jensen => "p1-jensen",
            AuditId::PresOrder => "pres-order",
        }
    }
}

/// How `lhs` must relate to `rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    /// Strictly below, with no slack.
    Below,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityAudit {
    pub id: AuditId,
    pub key: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub status: AuditStatus,
    pub note: Option<String>,
}

impl InequalityAudit {
    pub fn judge(id: AuditId, key: String, relation: Relation, lhs: f64, rhs: f64) -> Self {
        let margin = match relation {
            Relation::AtMost | Relation::Below => rhs - lhs,
            Relation::AtLeast => lhs - rhs,
            Relation::Equal => -(lhs - rhs).abs(),
        };
        let slack = AUDIT_SLACK * 1f64.max(lhs.abs()).max(rhs.abs());
        let ok = match relation {
            Relation::Below => margin > 0.0,
            _ => margin >= -slack,
        };
        Self {
            id,
            key,
            relation,
            lhs,
            rhs,
            margin,
            status: if ok && margin.is_finite() { AuditStatus::Pass } else { AuditStatus::Fail },
            note: None,
        }
    }

    pub fn skipped(id: AuditId, key: String, reason: impl Into<String>) -> Self {
        Self {
            id,
            key,
            relation: Relation::AtMost,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            status: AuditStatus::Skipped,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status != AuditStatus::Fail
    }
}

/// Coupling of the non-extensive Hamiltonian the occupation audits refer to.
fn occupation_coupling(state: &StatePoint) -> Result<f64> {
    match state.params.variant {
        Variant::Free => Ok(0.0),
        Variant::NonExtensive => Ok(state.params.lambda),
        Variant::MeanField => {
            Err(Error::InvalidRequest("occupation inequalities are stated for the non-extensive Hamiltonian".into()))
        }
    }
}

fn level_key(state: &StatePoint, levels: &[usize]) -> String {
    let list: Vec<String> = levels.iter().map(|l| state.shells()[*l].norm2.to_string()).collect();
    format!("{}:s={}", state.key(), list.join(","))
}

/// `x ln(x/(x+1))`, taken as 0 below the representable range.
fn entropy_term(x: f64) -> f64 {
    if x < 1e-300 {
        0.0
    } else {
        -x * (1.0 / x).ln_1p()
    }
}

/// Gibbs–Bogoliubov bound with the quasi-free trial `Σ(ε_k - t - α) N_k`.
pub fn audit_og(state: &StatePoint, alpha: f64, t: f64) -> Result<InequalityAudit> {
    let gamma = t + alpha;
    let beta = state.params.beta;
    let volume = state.volume();
    let shells = state.shells();
    if shells.iter().any(|s| !(beta * (s.energy - gamma) > 0.0)) {
        return Err(Error::Domain(format!("trial t + alpha = {gamma} violates the gap condition")));
    }
    let (mut log_z, mut mean, mut var, mut squares) = (0.0, 0.0, 0.0, 0.0);
    for s in shells {
        let x = beta * (s.energy - gamma);
        let g = s.degeneracy as f64;
        let n = 1.0 / x.exp_m1();
        log_z -= g * (-(-x).exp_m1()).ln();
        mean += g * n;
        var += g * n * (n + 1.0);
        squares += g * n * (2.0 * n + 1.0);
    }
    let second = var + mean * mean;
    let p = &state.params;
    let interaction = match p.variant {
        Variant::Free => 0.0,
        Variant::MeanField => p.lambda / volume * second,
        Variant::NonExtensive => p.lambda / volume * (second + 0.5 * squares),
    };
    let difference = (gamma - p.mu) * mean + interaction;
    let rhs = log_z / (beta * volume) - difference / volume;
    let key = format!("{}:trial={gamma:.6}", state.key());
    Ok(InequalityAudit::judge(AuditId::Og, key, Relation::AtLeast, state.pressure(), rhs))
}

/// The single-mode correlation bound for one mode of level `k`.
pub fn audit_in1(state: &StatePoint, k: usize) -> Result<InequalityAudit> {
    let lambda = occupation_coupling(state)?;
    let ens = state.ensemble()?;
    let (beta, mu, v) = (state.params.beta, state.params.mu, state.volume());
    let occ = ens.occupation(k)?;
    let with_total = ens.with_total(k)?;
    let eps = state.shells()[k].energy;
    let lhs =
        beta * ((mu - eps + 1.5 * lambda / v) * occ.mean - 2.0 * lambda / v * with_total - lambda / v * occ.second);
    let rhs = entropy_term(occ.mean);
    Ok(InequalityAudit::judge(AuditId::In1, level_key(state, &[k]), Relation::AtLeast, lhs, rhs))
}

/// The two-mode bound for a mode of level `j` and another of level `k`.
/// `negate` flips the inequality; it exists to exercise failure reporting.
pub fn audit_in2(state: &StatePoint, j: usize, k: usize, negate: bool) -> Result<InequalityAudit> {
    let lambda = occupation_coupling(state)?;
    let ens = state.ensemble()?;
    let (mu, v) = (state.params.mu, state.volume());
    let occ = ens.occupation(k)?;
    let with_total = ens.with_total(k)?;
    let pair = ens.pair(j, k)?;
    let eps_j = state.shells()[j].energy;
    let lhs = mu * occ.mean - 2.0 * lambda / v * with_total;
    let rhs = eps_j * occ.mean + 4.0 * lambda / v * pair + 1.5 * lambda / v * occ.mean;
    let relation = if negate { Relation::AtLeast } else { Relation::AtMost };
    Ok(InequalityAudit::judge(AuditId::In2, level_key(state, &[j, k]), relation, lhs, rhs))
}

/// The combination of the single- and two-mode bounds.
pub fn audit_in3(state: &StatePoint, j: usize, k: usize) -> Result<InequalityAudit> {
    let lambda = occupation_coupling(state)?;
    let ens = state.ensemble()?;
    let (beta, v) = (state.params.beta, state.volume());
    let occ = ens.occupation(k)?;
    let pair = ens.pair(j, k)?;
    let (eps_j, eps_k) = (state.shells()[j].energy, state.shells()[k].energy);
    let lhs = beta * (eps_k - eps_j - 3.0 * lambda / v) * occ.mean - beta * 4.0 * lambda / v * pair;
    let rhs = -entropy_term(occ.mean);
    Ok(InequalityAudit::judge(AuditId::In3, level_key(state, &[j, k]), Relation::AtMost, lhs, rhs))
}

/// The occupation bound for every shell with `|k| ≥ δ`, using a mode of
/// level `j` with `|j| ≤ δ/2`.
pub fn audit_lemma4(state: &StatePoint, delta: f64, j: usize) -> Result<Vec<InequalityAudit>> {
    let lambda = occupation_coupling(state)?;
    let spec = &state.spec;
    let shells = state.shells();
    if j >= shells.len() || shells[j].wavenumber(spec) > 0.5 * delta {
        return Err(Error::InvalidRequest(format!("reference level {j} must satisfy |j| <= delta/2")));
    }
    let targets: Vec<usize> = (0..shells.len()).filter(|&k| shells[k].wavenumber(spec) >= delta).collect();
    if targets.is_empty() {
        return Err(Error::InvalidRequest(format!("no modes with |k| >= {delta} in this box")));
    }
    let (beta, v, m) = (state.params.beta, state.volume(), spec.mass);
    let shift = delta * delta / (8.0 * m) + 3.0 * lambda / v;
    let c_delta = beta * (delta * delta / (2.0 * m) - shift);
    let ens = state.ensemble()?;
    targets
        .into_iter()
        .map(|k| {
            let key = format!("{}:delta={delta}", level_key(state, &[j, k]));
            if c_delta <= 0.0 {
                return Ok(InequalityAudit::skipped(
                    AuditId::Lemma4,
                    key,
                    format!("vacuous: c_delta = {c_delta:.3e} <= 0"),
                ));
            }
            let c_k = beta * (shells[k].energy - shift);
            let occ = ens.occupation(k)?;
            let pair = ens.pair(j, k)?;
            let rhs = 1.0 / c_k.exp_m1() + beta * 4.0 * lambda / v * pair / -(-c_delta).exp_m1();
            Ok(InequalityAudit::judge(AuditId::Lemma4, key, Relation::AtMost, occ.mean, rhs))
        })
        .collect()
}

/// Decay of `V⁻²⟨N N_j⟩` and `V⁻²Σ_k⟨N_k²⟩` along a volume ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma5Report {
    pub volumes: Vec<f64>,
    pub with_total: Vec<f64>,
    pub squares: Vec<f64>,
    pub with_total_exponent: f64,
    pub squares_exponent: f64,
    /// One strict-decrease check per consecutive pair of volumes and series.
    pub audits: Vec<InequalityAudit>,
}

impl Lemma5Report {
    pub fn passed(&self) -> bool {
        self.audits.iter().all(|a| a.passed())
    }
}

pub fn audit_lemma5(states: &[StatePoint], j: usize) -> Result<Lemma5Report> {
    if states.len() < 3 {
        return Err(Error::InvalidRequest("the decay audit needs at least three volumes".into()));
    }
    let mut volumes = Vec::new();
    let mut with_total = Vec::new();
    let mut squares = Vec::new();
    for s in states {
        let v = s.volume();
        let ens = s.ensemble()?;
        volumes.push(v);
        with_total.push(ens.with_total(j)? / (v * v));
        let sum: f64 =
            s.shells().iter().zip(&s.moments.occupations).map(|(sh, o)| sh.degeneracy as f64 * o.second).sum();
        squares.push(sum / (v * v));
    }
    let mut audits = Vec::new();
    for (label, series) in [("with_total", &with_total), ("squares", &squares)] {
        for i in 1..states.len() {
            let key = format!("{}:{label}:from={}", states[i].key(), states[i - 1].spec.side_length);
            audits.push(InequalityAudit::judge(AuditId::Lemma5, key, Relation::Below, series[i], series[i - 1]));
        }
    }
    Ok(Lemma5Report {
        with_total_exponent: power_law_exponent(&volumes, &with_total),
        squares_exponent: power_law_exponent(&volumes, &squares),
        volumes,
        with_total,
        squares,
        audits,
    })
}

/// Finite-volume mean-field pressure at the state's `μ` and box.
pub fn finite_mf_pressure(state: &StatePoint, options: &TruncationOptions) -> Result<f64> {
    let params = ModelParams { variant: Variant::MeanField, ..state.params };
    let ens = Ensemble::build(&state.levels(), &params, state.volume(), options)?;
    Ok(ens.pressure())
}

/// `0 ≤ (λ/2V²)Σ_k⟨N_k²⟩ ≤ p^MF_Λ - p̃_Λ` (Jensen).
pub fn audit_p1_jensen(state: &StatePoint, options: &TruncationOptions) -> Result<InequalityAudit> {
    if state.params.variant != Variant::NonExtensive {
        return Err(Error::InvalidRequest("the Jensen chain compares the non-extensive model".into()));
    }
    let v = state.volume();
    let squares: f64 =
        state.shells().iter().zip(&state.moments.occupations).map(|(s, o)| s.degeneracy as f64 * o.second).sum();
    let lhs = state.params.lambda / (2.0 * v * v) * squares;
    let gap = finite_mf_pressure(state, options)? - state.pressure();
    let audit = InequalityAudit::judge(AuditId::P1Jensen, state.key(), Relation::AtMost, lhs, gap);
    if lhs < 0.0 {
        return Ok(InequalityAudit { status: AuditStatus::Fail, ..audit });
    }
    Ok(audit)
}

/// `(βV)⁻¹ ln ω(e^{(βλ/2V)ΣN_k²})` by integrating `(λ/2V²)⟨ΣN_k²⟩_s` along
/// the path that switches the per-mode term off.
fn pressure_gap_by_integration(state: &StatePoint, options: &TruncationOptions) -> Result<f64> {
    let p = &state.params;
    let v = state.volume();
    let levels = state.levels();
    let failure = std::cell::RefCell::new(None);
    let integrand = |s: f64| -> f64 {
        let couplings = Couplings { mode: p.lambda * (1.0 - s), total: p.lambda };
        let eval = || -> Result<f64> {
            let ens = Ensemble::build_with_couplings(&levels, p.beta, p.mu, couplings, v, options)?;
            let occ = ens.occupations()?;
            Ok(levels.iter().zip(&occ).map(|(l, o)| l.degeneracy as f64 * o.second).sum::<f64>())
        };
        match eval() {
            Ok(sum) => p.lambda / (2.0 * v * v) * sum,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let q = integrate(integrand, 0.0, 1.0, 0.0, 1e-12, 64);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !(q.error_estimate <= 1e-10 * q.value.abs().max(1e-300)) {
        return Err(Error::Truncation(format!("path integral did not converge (estimate {:e})", q.error_estimate)));
    }
    Ok(q.value)
}

/// `p̃_Λ ≤ p^MF_Λ`, and the gap equals the `e^{(βλ/2V)ΣN_k²}` average
/// computed independently by thermodynamic integration.
pub fn audit_pres_order(state: &StatePoint, options: &TruncationOptions) -> Result<[InequalityAudit; 2]> {
    if state.params.variant != Variant::NonExtensive {
        return Err(Error::InvalidRequest("the pressure ordering compares the non-extensive model".into()));
    }
    let p_mf = finite_mf_pressure(state, options)?;
    let order = InequalityAudit::judge(
        AuditId::PresOrder,
        format!("{}:order", state.key()),
        Relation::AtMost,
        state.pressure(),
        p_mf,
    );
    let integrated = pressure_gap_by_integration(state, options)?;
    let identity = InequalityAudit::judge(
        AuditId::PresOrder,
        format!("{}:identity", state.key()),
        Relation::Equal,
        p_mf - state.pressure(),
        integrated,
    )
    .with_note("rhs by thermodynamic integration");
    Ok([order, identity])
}
