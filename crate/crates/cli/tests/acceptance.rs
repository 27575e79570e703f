//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Tolerances are pinned here and nowhere else.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nonext_bec::analysis::{
    audit_pres_order, evaluate, oracle_check, scaling_sweep, toy_suite, AuditStatus, Classification, StatePoint,
};
use nonext_bec::modes::{enumerate_shells, BoxSpec};
use nonext_bec::partition::{levels_from_shells, EngineChoice, Ensemble, ModelParams, TruncationOptions, Variant};
use nonext_bec::thermolimit::{
    bose_density, bose_density_quadrature, bose_pressure, bose_pressure_quadrature, critical_beta,
    critical_beta_by_root, critical_density, mf_pressure,
};
use nonext_bec_cli::{run, Cli, Command, RunConfig};
use rayon::prelude::*;

const ORACLE_TOL: f64 = 1e-10;
const ORACLE_SECONDS: f64 = 60.0;
const CLOSED_FORM_TOL: f64 = 1e-10;
const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-5;
const IDENTITY_TOL: f64 = 1e-9;
const FINAL_GAP: f64 = 0.05;
const EXPONENT_CUT: f64 = -0.2;
const BAND_SLACK: f64 = 0.05;
const SERIES_TOL: f64 = 1e-10;
const BETA_C_TOL: f64 = 1e-12;
const ALPHA_GRID_TOL: f64 = 1e-9;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1e-300)
    }
}

fn beta_c() -> f64 {
    critical_beta(1.0, 1.0, 3).unwrap()
}

fn state(variant: Variant, lambda: f64, beta: f64, mu: f64, side: f64) -> StatePoint {
    let spec = BoxSpec::with_thermal_cutoff(3, side, 1.0, beta, 30.0).unwrap();
    let params = ModelParams::new(variant, lambda, beta, mu).unwrap();
    evaluate(&spec, &params, &TruncationOptions::default()).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let suite = toy_suite();
    let variants: Vec<Variant> = suite.iter().map(|(_, s)| s.params.variant).collect();
    let shells_ok = suite.iter().all(|(_, s)| {
        let mut e = s.energies.clone();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e.len() <= 4 && s.cap <= 6
    });
    let all_variants = [Variant::Free, Variant::MeanField, Variant::NonExtensive].iter().all(|v| variants.contains(v));
    let start = Instant::now();
    let report = oracle_check(&suite, 1e-12).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{} toys, max relative deviation {:.2e} (tol {ORACLE_TOL:e}), {secs:.2} s",
        suite.len(),
        report.max_deviation
    );
    if suite.len() >= 10 && shells_ok && all_variants && report.max_deviation <= ORACLE_TOL && secs < ORACLE_SECONDS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn free_closed_forms() -> Verdict {
    let spec = BoxSpec::new(3, 4.0, 1.0, 3).unwrap();
    let levels = levels_from_shells(&enumerate_shells(&spec).unwrap());
    let v = spec.volume();
    let options = TruncationOptions { engine: EngineChoice::Hybrid, ..TruncationOptions::default() };
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for beta in [0.5, 1.0, 2.0, 4.0] {
        for mu in [-2.0, -1.0, -0.3, -0.05, -0.01] {
            let ens = Ensemble::build(&levels, &ModelParams::new(Variant::Free, 0.0, beta, mu).unwrap(), v, &options)
                .map_err(|e| e.to_string())?;
            let log_z: f64 =
                levels.iter().map(|l| -(l.degeneracy as f64) * (-(-beta * (l.energy - mu)).exp()).ln_1p()).sum();
            worst = worst.max(rel(ens.pressure(), log_z / (beta * v)));
            for (k, l) in levels.iter().enumerate() {
                let bose = 1.0 / (beta * (l.energy - mu)).exp_m1();
                worst = worst.max(rel(ens.occupation(k).map_err(|e| e.to_string())?.mean, bose));
            }
            points += 1;
        }
    }
    let detail = format!("{points} (beta, mu) points, max relative deviation {worst:.2e} (tol {CLOSED_FORM_TOL:e})");
    if points >= 20 && worst <= CLOSED_FORM_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn thermodynamic_consistency() -> Verdict {
    let mut cases = Vec::new();
    for (variant, lambda) in [(Variant::Free, 0.0), (Variant::MeanField, 0.5), (Variant::NonExtensive, 0.5)] {
        for (beta, mu, side) in [(0.3, -0.4, 4.0), (0.6, 0.3, 4.0), (1.0, -0.1, 6.0), (0.6, 1.0, 6.0)] {
            if variant == Variant::Free && mu >= 0.0 {
                continue;
            }
            cases.push((variant, lambda, beta, mu, side));
        }
    }
    let options = TruncationOptions::default();
    let worst = cases
        .par_iter()
        .map(|&(variant, lambda, beta, mu, side)| {
            let spec = BoxSpec::with_thermal_cutoff(3, side, 1.0, beta, 30.0).unwrap();
            let levels = levels_from_shells(&enumerate_shells(&spec).unwrap());
            let v = spec.volume();
            let at = |m: f64| {
                Ensemble::build(&levels, &ModelParams::new(variant, lambda, beta, m).unwrap(), v, &options).unwrap()
            };
            let (lo, mid, hi) = (at(mu - FD_STEP), at(mu), at(mu + FD_STEP));
            let dp = (hi.pressure() - lo.pressure()) / (2.0 * FD_STEP);
            let dn = (hi.mean_n() - lo.mean_n()) / (2.0 * FD_STEP);
            rel(dp, mid.mean_n() / v).max(rel(dn, beta * mid.var_n()))
        })
        .reduce(|| 0.0, f64::max);
    let detail = format!("{} state points, max relative deviation {worst:.2e} (tol {FD_TOL:e})", cases.len());
    if cases.len() >= 10 && worst <= FD_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pressure_ordering() -> Verdict {
    let bc = beta_c();
    let mut grid = Vec::new();
    for f in [0.5, 1.0, 2.0] {
        for mu in [-0.5, 0.2, 0.6, 1.0] {
            for side in [4.0, 6.0, 8.0] {
                grid.push((f * bc, mu, side));
            }
        }
    }
    let rows: Vec<_> = grid
        .par_iter()
        .map(|&(beta, mu, side)| {
            let s = state(Variant::NonExtensive, 0.5, beta, mu, side);
            audit_pres_order(&s, &TruncationOptions::default()).unwrap()
        })
        .collect();
    let mut order_ok = true;
    let mut identity: f64 = 0.0;
    for [order, ident] in &rows {
        order_ok &= order.status == AuditStatus::Pass && order.lhs <= order.rhs;
        identity = identity.max((ident.lhs - ident.rhs).abs());
    }
    let detail = format!(
        "{} points, ordering {}, max identity deviation {identity:.2e} (tol {IDENTITY_TOL:e})",
        rows.len(),
        if order_ok { "holds" } else { "violated" }
    );
    if order_ok && identity <= IDENTITY_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pressure_convergence() -> Verdict {
    let bc = beta_c();
    let lambda = 0.5;
    let sides = [4.0, 6.0, 8.0, 12.0, 16.0];
    let mut series = Vec::new();
    for f in [0.5, 1.0] {
        let beta = f * bc;
        let edge = 2.0 * lambda * critical_density(beta, 1.0, 3).unwrap();
        for m in [0.5, 0.8, 1.2, 1.5] {
            series.push((beta, m * edge));
        }
    }
    let results: Vec<(bool, f64)> = series
        .par_iter()
        .map(|&(beta, mu)| {
            let limit = mf_pressure(mu, lambda, beta, 1.0, 3).unwrap().pressure;
            let gaps: Vec<f64> = sides
                .iter()
                .map(|&l| (state(Variant::NonExtensive, lambda, beta, mu, l).pressure() - limit).abs() / limit)
                .collect();
            (gaps.windows(2).all(|w| w[1] < w[0]), *gaps.last().unwrap())
        })
        .collect();
    let monotone = results.iter().filter(|r| r.0).count();
    let final_gap = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let detail = format!(
        "{monotone}/{} series strictly decreasing over L = 4..16, largest final gap {:.2}% (bar {:.0}%)",
        results.len(),
        100.0 * final_gap,
        100.0 * FINAL_GAP
    );
    if monotone == results.len() && final_gap < FINAL_GAP {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn inequality_audits() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig::load(&fixture("audit.json")).map_err(|e| e.to_string())?;
    let a = cfg.audit.as_ref().unwrap();
    let points = a.beta_factors.len() * a.mu.len() * a.sides.len();
    let outcome = nonext_bec_cli::commands::audit(&cfg, dir.path());
    let mut counts: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(dir.path().join("audit.csv")).map_err(|e| e.to_string())?;
    for r in reader.records() {
        let r = r.map_err(|e| e.to_string())?;
        let slot = match &r[6] {
            "pass" => 0,
            "fail" => 1,
            _ => 2,
        };
        counts.entry(r[0].to_string()).or_default()[slot] += 1;
    }
    let every = ["og", "in1", "in2", "in3", "lemma4", "lemma5", "p1-jensen"];
    let covered = every.iter().all(|id| counts.get(*id).is_some_and(|c| c[0] > 0));
    let fails: usize = counts.values().map(|c| c[1]).sum();
    let passes: usize = counts.values().map(|c| c[0]).sum();
    let detail = format!("{points} state points, {passes} rows passed, {fails} failed");
    if outcome.is_ok() && covered && fails == 0 && points >= 30 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn condensation() -> Verdict {
    let report = |name: &str| {
        let cfg = RunConfig::load(&fixture(name)).unwrap();
        let spec = cfg.sweep.unwrap();
        let r = scaling_sweep(&spec, &cfg.truncation.options()).unwrap();
        (spec, r)
    };
    let (spec, ne) = report("sweep_ne_cold.json");
    let (_, free) = report("sweep_free_cold.json");
    let (_, hot) = report("sweep_ne_hot.json");
    let decreasing = ne.ground.windows(2).all(|w| w[1] < w[0]);
    let band = ne.bands.iter().min_by(|a, b| a.delta.total_cmp(&b.delta)).unwrap();
    let rho_c = critical_density(spec.beta, spec.mass, spec.dimension).unwrap();
    let bar = spec.rho - rho_c - BAND_SLACK * spec.rho;
    let band_last = *band.density.last().unwrap();
    let detail = format!(
        "n0/V exponent {:.3}, band(delta={}) {band_last:.3} vs bar {bar:.3}; classes {:?}, free {:?}, hot {:?}",
        ne.ground_exponent, band.delta, ne.classification, free.classification, hot.classification
    );
    let ok = decreasing
        && ne.ground_exponent < EXPONENT_CUT
        && band_last >= bar
        && ne.classification == Classification::NonExtensive
        && free.classification == Classification::GroundState
        && hot.classification == Classification::None;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn limit_formulas() -> Verdict {
    let mut series: f64 = 0.0;
    for beta in [0.3, 1.0, 2.5] {
        for alpha in [0.0, -1e-4, -0.01, -0.3, -1.0, -4.0] {
            let p = bose_pressure(alpha, beta, 1.0, 3).unwrap();
            let q = bose_pressure_quadrature(alpha, beta, 1.0, 3).unwrap();
            let d = bose_density(alpha, beta, 1.0, 3).unwrap();
            let e = bose_density_quadrature(alpha, beta, 1.0, 3).unwrap();
            series = series.max(rel(p, q)).max(rel(d, e));
        }
    }
    let mut beta_c_dev: f64 = 0.0;
    for rho in [0.1, 1.0, 10.0] {
        beta_c_dev =
            beta_c_dev.max(rel(critical_beta(rho, 1.0, 3).unwrap(), critical_beta_by_root(rho, 1.0, 3).unwrap()));
    }
    // The variational minimum against a dense grid of trial alphas.
    let (lambda, beta) = (0.5, 2.0 * beta_c());
    let mut grid_ok = true;
    let mut closest: f64 = 0.0;
    for mu in [-1.0, 0.1, 0.3, 0.5, 1.0] {
        let mf = mf_pressure(mu, lambda, beta, 1.0, 3).unwrap();
        let span = 2.0 * mu.abs() + 2.0;
        let best = (0..10_000)
            .map(|i| {
                let alpha = -span * i as f64 / 9_999.0;
                bose_pressure(alpha, beta, 1.0, 3).unwrap() + (mu - alpha).powi(2) / (4.0 * lambda)
            })
            .fold(f64::INFINITY, f64::min);
        grid_ok &= best >= mf.pressure - ALPHA_GRID_TOL;
        closest = closest.max(best - mf.pressure);
    }
    let detail = format!(
        "series vs quadrature {series:.2e} (tol {SERIES_TOL:e}), beta_c {beta_c_dev:.2e} (tol {BETA_C_TOL:e}), \
         grid minimum above p_MF by at most {closest:.2e}"
    );
    if series <= SERIES_TOL && beta_c_dev <= BETA_C_TOL && grid_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Verdict {
    let jobs = [
        (Command::Pressure, "pressure_free.json"),
        (Command::Pressure, "pressure_ne.json"),
        (Command::Sweep, "sweep_ne_cold.json"),
        (Command::Sweep, "sweep_free_cold.json"),
        (Command::Sweep, "sweep_mf_cold.json"),
        (Command::Sweep, "sweep_ne_hot.json"),
        (Command::Audit, "audit.json"),
        (Command::Audit, "audit_negated_in2.json"),
        (Command::OracleCheck, "oracle_check.json"),
        (Command::Limits, "limits.json"),
        (Command::Modes, "modes.json"),
    ];
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut differing = Vec::new();
    let mut files = 0;
    for (i, (command, name)) in jobs.iter().enumerate() {
        let trees: Vec<_> = [1usize, 2, 8]
            .iter()
            .map(|&threads| {
                let out = root.path().join(format!("{i}-{threads}"));
                let cli = Cli {
                    command: *command,
                    config: Some(fixture(name)),
                    out: out.clone(),
                    threads: Some(threads),
                    seedless: false,
                };
                let _ = run(&cli);
                read_tree(&out)
            })
            .collect();
        files += trees[0].len();
        if trees[0].is_empty() || trees.iter().any(|t| t != &trees[0]) {
            differing.push(*name);
        }
    }
    let detail = format!("{} fixture runs, {files} files compared across 1, 2 and 8 threads", jobs.len());
    if differing.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; differing: {}", differing.join(", ")))
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("free-gas closed forms", free_closed_forms),
        ("thermodynamic consistency", thermodynamic_consistency),
        ("finite-volume pressure ordering and identity", pressure_ordering),
        ("pressure convergence trend", pressure_convergence),
        ("inequality audits", inequality_audits),
        ("non-extensive condensation", condensation),
        ("limit formulas", limit_formulas),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
