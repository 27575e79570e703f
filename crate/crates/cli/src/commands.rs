//! One function per subcommand. Each evaluates its state points on the
//! current rayon pool and writes its outputs in a fixed order.

use std::collections::BTreeMap;
use std::path::Path;

use nonext_bec::analysis::{
    audit_in1, audit_in2, audit_in3, audit_lemma4, audit_lemma5, audit_og, audit_p1_jensen, audit_pres_order, evaluate,
    oracle_check, scaling_sweep, toy_suite, AuditId, AuditStatus, InequalityAudit, StatePoint,
};
use nonext_bec::modes::{enumerate_shells, BoxSpec};
use nonext_bec::partition::{EngineChoice, Ensemble, ModelParams, TruncationOptions, Variant};
use nonext_bec::thermolimit::{bose_pressure, critical_beta, limit_quantities, mf_pressure, LimitInputs};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AuditConfig, RunConfig};
use crate::error::CliError;
use crate::output::{num, write_json, Table};

/// What a command wrote, for the one-line status message.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<String>,
    pub summary: String,
}

fn missing(block: &str) -> CliError {
    CliError::Config(format!("the configuration has no `{block}` block"))
}

/// Limit pressure of the mean-field model and its minimizer; the free gas
/// when `λ = 0`.
fn mf_limit(mu: f64, lambda: f64, beta: f64, mass: f64, dimension: usize) -> Result<(f64, f64), CliError> {
    if lambda > 0.0 {
        let mf = mf_pressure(mu, lambda, beta, mass, dimension)?;
        Ok((mf.pressure, mf.alpha_star))
    } else {
        Ok((bose_pressure(mu, beta, mass, dimension)?, mu))
    }
}

pub fn pressure(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let p = cfg.pressure.as_ref().ok_or_else(|| missing("pressure"))?;
    let options = cfg.truncation.options();
    let grid: Vec<(f64, f64)> = p.sides.iter().flat_map(|&l| p.mu.iter().map(move |&m| (l, m))).collect();
    let rows = grid
        .par_iter()
        .map(|&(side, mu)| -> Result<Vec<String>, CliError> {
            let spec = BoxSpec::with_thermal_cutoff(p.dimension, side, p.mass, p.beta, p.energy_cut)?;
            let params = ModelParams::new(p.variant, p.lambda, p.beta, mu)?;
            let state = evaluate(&spec, &params, &options)?;
            if p.variant == Variant::Free {
                cross_check_free(&state, &options)?;
            }
            let mf_params = ModelParams { variant: Variant::MeanField, ..params };
            let mf_finite = Ensemble::build(&state.levels(), &mf_params, spec.volume(), &options)?.pressure();
            let (limit, alpha_star) = mf_limit(mu, p.lambda, p.beta, p.mass, p.dimension)?;
            Ok(vec![
                num(side),
                num(spec.volume()),
                num(mu),
                num(state.pressure()),
                num(mf_finite),
                num(limit),
                num(alpha_star),
                num(state.moments.tail_mass),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new([
        "L",
        "V",
        "mu",
        "pressure_finite",
        "pressure_mf_finite",
        "pressure_mf_limit",
        "alpha_star",
        "tail_mass",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    let path = out.join("pressure.csv");
    table.write(&path)?;
    Ok(Outcome { files: vec!["pressure.csv".into()], summary: format!("{} state points", table.len()) })
}

/// The general engine must reproduce the closed-form free gas.
fn cross_check_free(state: &StatePoint, options: &TruncationOptions) -> Result<(), CliError> {
    let hybrid = TruncationOptions { engine: EngineChoice::Hybrid, ..*options };
    let general = Ensemble::build(&state.levels(), &state.params, state.volume(), &hybrid)?.pressure();
    let closed = state.pressure();
    if (general - closed).abs() > 1e-10 * closed.abs().max(1e-300) {
        return Err(CliError::Certification(format!(
            "free-gas cross-check failed at {}: {general} vs closed form {closed}",
            state.key()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    classification: nonext_bec::analysis::Classification,
    ground_exponent: f64,
    volumes: &'a [f64],
    mu: &'a [f64],
    ground: &'a [f64],
    max_mode: &'a [f64],
    bands: &'a [nonext_bec::analysis::BandSeries],
    spec: &'a nonext_bec::analysis::SweepSpec,
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
    let report = scaling_sweep(spec, &cfg.truncation.options())?;
    let mut header: Vec<String> =
        ["L", "V", "mu", "density", "ground_density", "max_mode_density"].map(String::from).to_vec();
    header.extend(report.bands.iter().map(|b| format!("band_{}", b.delta)));
    header.extend(["tail_mass".to_string(), "n_max".to_string()]);
    let mut table = Table::new(header);
    for (i, point) in report.points.iter().enumerate() {
        let mut row = vec![
            num(point.spec.side_length),
            num(report.volumes[i]),
            num(report.mu[i]),
            num(point.density),
            num(report.ground[i]),
            num(report.max_mode[i]),
        ];
        row.extend(report.bands.iter().map(|b| num(b.density[i])));
        row.push(num(point.moments.tail_mass));
        row.push(point.moments.n_max.to_string());
        table.push(row);
    }
    table.write(&out.join("sweep.csv"))?;
    let summary = SweepSummary {
        classification: report.classification,
        ground_exponent: report.ground_exponent,
        volumes: &report.volumes,
        mu: &report.mu,
        ground: &report.ground,
        max_mode: &report.max_mode,
        bands: &report.bands,
        spec,
    };
    write_json(&out.join("sweep.json"), "sweep", &cfg.hash(), &summary)?;
    let label = serde_json::to_value(report.classification).expect("classification serializes");
    Ok(Outcome {
        files: vec!["sweep.csv".into(), "sweep.json".into()],
        summary: format!("classification {}", label.as_str().unwrap_or("?")),
    })
}

fn wanted(a: &AuditConfig, id: AuditId) -> bool {
    a.audits.is_empty() || a.audits.contains(&id)
}

/// Runs the selected per-state audits; inapplicable ones become skipped rows.
fn state_audits(
    a: &AuditConfig,
    state: &StatePoint,
    options: &TruncationOptions,
) -> Result<Vec<InequalityAudit>, CliError> {
    let mut rows = Vec::new();
    let levels = state.shells().len().min(a.max_levels);
    let occupation_ok = state.params.variant != Variant::MeanField;
    let ne = state.params.variant == Variant::NonExtensive;
    let na = |id: AuditId, why: &str| InequalityAudit::skipped(id, state.key(), why.to_string());
    if wanted(a, AuditId::Og) {
        let p = &state.params;
        let mut trials = a.og_alphas.clone();
        if a.og_alpha_star {
            let (_, alpha_star) = mf_limit(p.mu, p.lambda, p.beta, state.spec.mass, state.spec.dimension)?;
            if alpha_star < 0.0 {
                trials.insert(0, alpha_star);
            } else {
                rows.push(na(AuditId::Og, "alpha* = 0 sits on the gap edge"));
            }
        }
        for alpha in trials {
            rows.push(audit_og(state, alpha, 0.0)?);
        }
    }
    if occupation_ok {
        if wanted(a, AuditId::In1) {
            for k in 0..levels {
                rows.push(audit_in1(state, k)?);
            }
        }
        for k in 1..levels {
            if wanted(a, AuditId::In2) {
                rows.push(audit_in2(state, 0, k, a.test_hooks.negate_in2)?);
            }
            if wanted(a, AuditId::In3) {
                rows.push(audit_in3(state, 0, k)?);
            }
        }
        if wanted(a, AuditId::Lemma4) {
            for &delta in &a.deltas {
                match audit_lemma4(state, delta, 0) {
                    Ok(v) => rows.extend(v),
                    Err(nonext_bec::Error::InvalidRequest(why)) => rows.push(InequalityAudit::skipped(
                        AuditId::Lemma4,
                        format!("{}:delta={delta}", state.key()),
                        why,
                    )),
                    Err(e) => return Err(e.into()),
                }
            }
        }
    } else {
        for id in [AuditId::In1, AuditId::In2, AuditId::In3, AuditId::Lemma4] {
            if wanted(a, id) {
                rows.push(na(id, "stated for the non-extensive Hamiltonian"));
            }
        }
    }
    if wanted(a, AuditId::P1Jensen) {
        rows.push(if ne { audit_p1_jensen(state, options)? } else { na(AuditId::P1Jensen, "non-extensive only") });
    }
    if wanted(a, AuditId::PresOrder) {
        if ne {
            rows.extend(audit_pres_order(state, options)?);
        } else {
            rows.push(na(AuditId::PresOrder, "non-extensive only"));
        }
    }
    Ok(rows)
}

#[derive(Serialize, Default)]
struct Tally {
    pass: usize,
    fail: usize,
    skipped: usize,
}

pub fn audit(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let a = cfg.audit.as_ref().ok_or_else(|| missing("audit"))?;
    let options = cfg.truncation.options();
    let beta_c = critical_beta(a.reference_density, a.mass, 3)?;
    let mut series = Vec::new();
    for &f in &a.beta_factors {
        for &mu in &a.mu {
            series.push((f * beta_c, mu));
        }
    }
    let grid: Vec<(f64, f64, f64)> =
        series.iter().flat_map(|&(b, m)| a.sides.iter().map(move |&l| (b, m, l))).collect();
    let states = grid
        .par_iter()
        .map(|&(beta, mu, side)| -> Result<StatePoint, CliError> {
            let spec = BoxSpec::with_thermal_cutoff(3, side, a.mass, beta, a.energy_cut)?;
            let params = ModelParams::new(a.variant, a.lambda, beta, mu)?;
            Ok(evaluate(&spec, &params, &options)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let per_state = states.par_iter().map(|s| state_audits(a, s, &options)).collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<InequalityAudit> = per_state.into_iter().flatten().collect();
    if wanted(a, AuditId::Lemma5) {
        for chunk in states.chunks(a.sides.len()) {
            if chunk.len() < 3 {
                rows.push(InequalityAudit::skipped(AuditId::Lemma5, chunk[0].key(), "needs three volumes"));
                continue;
            }
            rows.extend(audit_lemma5(chunk, 0)?.audits);
        }
    }
    let mut table = Table::new(["id", "key", "relation", "lhs", "rhs", "margin", "status", "note"]);
    let mut tally: BTreeMap<&str, Tally> = BTreeMap::new();
    for r in &rows {
        let t = tally.entry(r.id.name()).or_default();
        match r.status {
            AuditStatus::Pass => t.pass += 1,
            AuditStatus::Fail => t.fail += 1,
            AuditStatus::Skipped => t.skipped += 1,
        }
        let relation = serde_json::to_value(r.relation).expect("relation serializes");
        let status = serde_json::to_value(r.status).expect("status serializes");
        table.push(vec![
            r.id.name().to_string(),
            r.key.clone(),
            relation.as_str().unwrap_or("").to_string(),
            num(r.lhs),
            num(r.rhs),
            num(r.margin),
            status.as_str().unwrap_or("").to_string(),
            r.note.clone().unwrap_or_default(),
        ]);
    }
    table.write(&out.join("audit.csv"))?;
    #[derive(Serialize)]
    struct Summary<'a> {
        state_points: usize,
        audits: &'a BTreeMap<&'a str, Tally>,
    }
    write_json(&out.join("audit.json"), "audit", &cfg.hash(), &Summary { state_points: states.len(), audits: &tally })?;
    let failures: usize = tally.values().map(|t| t.fail).sum();
    let files = vec!["audit.csv".into(), "audit.json".into()];
    if failures > 0 {
        return Err(CliError::Audit(format!("{failures} of {} audit rows failed (see audit.csv)", rows.len())));
    }
    Ok(Outcome { files, summary: format!("{} audit rows over {} state points, all passed", rows.len(), states.len()) })
}

pub fn oracle(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let o = cfg.oracle_check.as_ref().ok_or_else(|| missing("oracle_check"))?;
    let mut suite = if o.default_suite { toy_suite() } else { Vec::new() };
    suite.extend(o.systems.iter().map(|t| (t.name.clone(), t.system.clone())));
    if suite.is_empty() {
        return Err(CliError::Config("oracle_check: empty toy suite".into()));
    }
    // Each toy is independent; the report keeps the suite order.
    let reports = suite
        .par_iter()
        .map(|entry| oracle_check(std::slice::from_ref(entry), o.cap_flag))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<_> = reports.into_iter().flat_map(|r| r.rows).collect();
    let max_deviation = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    let mut table =
        Table::new(["name", "variant", "modes", "log_z_deviation", "max_deviation", "cap_pressure", "flagged"]);
    for r in &rows {
        table.push(vec![
            r.name.clone(),
            r.variant.name().to_string(),
            r.modes.to_string(),
            num(r.log_z_deviation),
            num(r.max_deviation),
            num(r.cap_pressure),
            r.flagged.to_string(),
        ]);
    }
    table.write(&out.join("oracle_check.csv"))?;
    #[derive(Serialize)]
    struct Summary {
        systems: usize,
        max_deviation: f64,
        tolerance: f64,
        flagged: Vec<String>,
    }
    let summary = Summary {
        systems: rows.len(),
        max_deviation,
        tolerance: o.tolerance,
        flagged: rows.iter().filter(|r| r.flagged).map(|r| r.name.clone()).collect(),
    };
    write_json(&out.join("oracle_check.json"), "oracle-check", &cfg.hash(), &summary)?;
    if !(max_deviation <= o.tolerance) {
        return Err(CliError::Audit(format!("max deviation {max_deviation:e} exceeds {:e}", o.tolerance)));
    }
    Ok(Outcome {
        files: vec!["oracle_check.csv".into(), "oracle_check.json".into()],
        summary: format!("{} systems, max relative deviation {max_deviation:e}", rows.len()),
    })
}

pub fn limits(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let l = cfg.limits.as_ref().ok_or_else(|| missing("limits"))?;
    let mut grid = Vec::new();
    for &beta in &l.betas {
        for &mu in &l.mu {
            for &alpha in &l.alphas {
                grid.push(LimitInputs {
                    alpha,
                    mu,
                    lambda: l.lambda,
                    beta,
                    mass: l.mass,
                    dimension: l.dimension,
                    rho: l.rho,
                });
            }
        }
    }
    let rows = grid
        .par_iter()
        .map(|inp| -> Result<Vec<String>, CliError> {
            let q = limit_quantities(inp)?;
            let opt = |t: Option<nonext_bec::thermolimit::Tagged>| t.map(|t| num(t.value)).unwrap_or_default();
            Ok(vec![
                num(inp.beta),
                num(q.alpha),
                num(q.mu),
                num(q.pressure.value),
                num(q.density.value),
                opt(q.critical_density),
                num(q.alpha_star.value),
                num(q.pressure_mf.value),
                opt(q.beta_c),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new([
        "beta",
        "alpha",
        "mu",
        "pressure",
        "density",
        "critical_density",
        "alpha_star",
        "pressure_mf",
        "beta_c",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    table.write(&out.join("limits.csv"))?;
    Ok(Outcome { files: vec!["limits.csv".into()], summary: format!("{} grid points", table.len()) })
}

pub fn modes(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let spec = cfg.modes.as_ref().ok_or_else(|| missing("modes"))?;
    let shells = enumerate_shells(spec)?;
    let mut table = Table::new(["norm2", "energy", "degeneracy", "wavenumber", "representative"]);
    for s in &shells {
        let rep: Vec<String> = s.representative.iter().map(|c| c.to_string()).collect();
        table.push(vec![
            s.norm2.to_string(),
            num(s.energy),
            s.degeneracy.to_string(),
            num(s.wavenumber(spec)),
            rep.join(" "),
        ]);
    }
    table.write(&out.join("modes.csv"))?;
    let total: u64 = shells.iter().map(|s| s.degeneracy).sum();
    Ok(Outcome { files: vec!["modes.csv".into()], summary: format!("{} shells, {total} modes", shells.len()) })
}
