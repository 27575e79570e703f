use nonext_bec::analysis::{
    audit_in1, audit_lemma4, audit_lemma5, audit_og, audit_pres_order, evaluate, scaling_sweep, solve_mu, AuditStatus,
    SweepSpec, DENSITY_TOL,
};
use nonext_bec::modes::{BandMode, BoxSpec};
use nonext_bec::partition::{ModelParams, TruncationOptions, Variant};
use nonext_bec::thermolimit::{bose_density, critical_beta, mf_pressure, shell_density};
use nonext_bec::Error;

fn beta_c() -> f64 {
    critical_beta(1.0, 1.0, 3).unwrap()
}

fn cold_box(side: f64, beta: f64) -> BoxSpec {
    BoxSpec::with_thermal_cutoff(3, side, 1.0, beta, 30.0).unwrap()
}

#[test]
fn chemical_potential_meets_the_density() {
    let o = TruncationOptions::default();
    for (variant, lambda) in [(Variant::Free, 0.0), (Variant::MeanField, 0.5), (Variant::NonExtensive, 0.5)] {
        for factor in [0.5, 2.0] {
            for side in [4.0, 6.0] {
                let beta = factor * beta_c();
                for rho in [0.3, 1.0] {
                    let s = solve_mu(&cold_box(side, beta), variant, lambda, beta, rho, &o).unwrap();
                    assert!((s.density - rho).abs() <= DENSITY_TOL, "{variant:?} {factor} {side}: {}", s.density);
                    if variant == Variant::Free {
                        assert!(s.params.mu < 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn density_solve_rejects_bad_targets() {
    let o = TruncationOptions::default();
    let spec = cold_box(4.0, 1.0);
    assert!(solve_mu(&spec, Variant::NonExtensive, 0.5, 1.0, -1.0, &o).is_err());
    assert!(solve_mu(&spec, Variant::NonExtensive, 0.5, 1.0, 0.0, &o).is_err());
}

/// Above the critical temperature a thin band holds the free-gas share at
/// the chemical potential that fixes the density.
#[test]
fn hot_band_approaches_the_free_band_integral() {
    let beta = 0.5 * beta_c();
    let (mut lo, mut hi) = (-50.0, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bose_density(mid, beta, 1.0, 3).unwrap() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s =
        solve_mu(&cold_box(24.0, beta), Variant::NonExtensive, 0.5, beta, 1.0, &TruncationOptions::default()).unwrap();
    for delta in [1.0, 2.0] {
        let limit = shell_density(0.0, delta, lo, beta, 1.0, 3).unwrap();
        let band = s.band(delta, BandMode::KNorm).unwrap().density;
        assert!((band - limit).abs() < 0.1 * limit, "delta {delta}: {band} vs {limit}");
    }
    assert!(s.ground_density() < 1e-3);
}

#[test]
fn squared_occupations_decay_only_without_the_ground_state_condensate() {
    let beta = 2.0 * beta_c();
    let o = TruncationOptions::default();
    let ladder = |variant| -> Vec<_> {
        [4.0, 6.0, 8.0, 12.0]
            .iter()
            .map(|&l| solve_mu(&cold_box(l, beta), variant, 0.5, beta, 1.0, &o).unwrap())
            .collect()
    };
    let ne = audit_lemma5(&ladder(Variant::NonExtensive), 0).unwrap();
    assert!(ne.passed());
    assert!(ne.squares_exponent < -0.3, "{}", ne.squares_exponent);
    let mf = audit_lemma5(&ladder(Variant::MeanField), 0).unwrap();
    assert!(mf.squares_exponent > -0.2, "{}", mf.squares_exponent);
    assert!(*mf.squares.last().unwrap() > 2.0 * ne.squares.last().unwrap());
}

#[test]
fn variational_bound_at_the_limit_minimizer() {
    let beta = beta_c();
    for mu in [-0.3, 0.1, 0.3] {
        let s = evaluate(
            &cold_box(6.0, beta),
            &ModelParams::new(Variant::NonExtensive, 0.5, beta, mu).unwrap(),
            &TruncationOptions::default(),
        )
        .unwrap();
        let alpha = mf_pressure(mu, 0.5, beta, 1.0, 3).unwrap().alpha_star;
        let a = audit_og(&s, alpha, 0.0).unwrap();
        assert_eq!(a.status, AuditStatus::Pass);
        assert!(a.margin >= 0.0);
    }
}

#[test]
fn free_gas_decay_bound_holds() {
    let beta = beta_c();
    for mu in [-0.3, -0.1, -1e-3] {
        let s = evaluate(
            &cold_box(6.0, beta),
            &ModelParams::new(Variant::Free, 0.0, beta, mu).unwrap(),
            &TruncationOptions::default(),
        )
        .unwrap();
        let rows = audit_lemma4(&s, 2.0, 0).unwrap();
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.status == AuditStatus::Pass));
    }
}

#[test]
fn occupation_audits_refuse_the_mean_field_model() {
    let s = evaluate(
        &cold_box(4.0, 1.0),
        &ModelParams::new(Variant::MeanField, 0.5, 1.0, 0.2).unwrap(),
        &TruncationOptions::default(),
    )
    .unwrap();
    assert!(matches!(audit_in1(&s, 0), Err(Error::InvalidRequest(_))));
    assert!(audit_pres_order(&s, &TruncationOptions::default()).is_err());
}

#[test]
fn pressure_gap_identity_on_a_cold_point() {
    let beta = 2.0 * beta_c();
    let s = evaluate(
        &cold_box(6.0, beta),
        &ModelParams::new(Variant::NonExtensive, 0.5, beta, 0.6).unwrap(),
        &TruncationOptions::default(),
    )
    .unwrap();
    let [order, identity] = audit_pres_order(&s, &TruncationOptions::default()).unwrap();
    assert_eq!(order.status, AuditStatus::Pass);
    assert!((identity.lhs - identity.rhs).abs() < 1e-9, "{} vs {}", identity.lhs, identity.rhs);
}

#[test]
fn sweep_rejects_unordered_ladders() {
    let spec = SweepSpec {
        variant: Variant::NonExtensive,
        sides: vec![6.0, 4.0, 8.0],
        rho: 1.0,
        beta: 1.0,
        lambda: 0.5,
        mass: 1.0,
        dimension: 3,
        energy_cut: 30.0,
        deltas: vec![1.0],
        band_mode: BandMode::KNorm,
        thresholds: Default::default(),
    };
    assert!(scaling_sweep(&spec, &TruncationOptions::default()).is_err());
}
