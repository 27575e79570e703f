use nonext_bec::analysis::toy_levels;
use nonext_bec::modes::{enumerate_shells, BoxSpec};
use nonext_bec::oracle::{enumerate_exact, ToySystem};
use nonext_bec::partition::{levels_from_shells, Ensemble, ModeLevel, ModelParams, TruncationOptions, Variant};
use nonext_bec::thermolimit::{bose_density, bose_pressure, mf_pressure};
use proptest::prelude::*;

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Free), Just(Variant::MeanField), Just(Variant::NonExtensive)]
}

fn toy() -> impl Strategy<Value = ToySystem> {
    (
        prop::collection::vec(0.0..2.0f64, 1..=4),
        1usize..=5,
        variant(),
        0.0..1.5f64,
        0.2..3.0f64,
        -1.5..1.5f64,
        0.5..4.0f64,
    )
        .prop_map(|(energies, cap, variant, lambda, beta, mu, volume)| {
            let lambda = if variant == Variant::Free { 0.0 } else { lambda };
            ToySystem { energies, cap, params: ModelParams { variant, lambda, beta, mu }, volume }
        })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn small_box() -> (Vec<ModeLevel>, f64) {
    let spec = BoxSpec::new(3, 4.0, 1.0, 2).unwrap();
    (levels_from_shells(&enumerate_shells(&spec).unwrap()), spec.volume())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn engine_matches_enumeration(sys in toy()) {
        let exact = enumerate_exact(&sys).unwrap();
        let (levels, index) = toy_levels(&sys);
        let ens = Ensemble::build(&levels, &sys.params, sys.volume, &TruncationOptions::default()).unwrap();
        prop_assert!(rel(ens.log_z(), exact.log_z) < 1e-10);
        prop_assert!(rel(ens.mean_n(), exact.mean_n) < 1e-10);
        prop_assert!(rel(ens.second_moment_n(), exact.second_n) < 1e-10);
        for (a, &l) in index.iter().enumerate() {
            prop_assert!(rel(ens.occupation(l).unwrap().mean, exact.means[a]) < 1e-10);
        }
    }

    #[test]
    fn level_order_is_irrelevant(sys in toy(), seed in any::<u64>()) {
        let (mut levels, _) = toy_levels(&sys);
        let a = Ensemble::build(&levels, &sys.params, sys.volume, &TruncationOptions::default()).unwrap();
        let n = levels.len();
        levels.rotate_left((seed as usize) % n);
        let b = Ensemble::build(&levels, &sys.params, sys.volume, &TruncationOptions::default()).unwrap();
        prop_assert!(rel(a.log_z(), b.log_z()) < 1e-12);
        prop_assert!(rel(a.mean_n(), b.mean_n()) < 1e-10);
    }

    #[test]
    fn occupations_add_up(sys in toy()) {
        let (levels, _) = toy_levels(&sys);
        let ens = Ensemble::build(&levels, &sys.params, sys.volume, &TruncationOptions::default()).unwrap();
        let occ = ens.occupations().unwrap();
        let sum: f64 = levels.iter().zip(&occ).map(|(l, o)| l.degeneracy as f64 * o.mean).sum();
        prop_assert!(rel(sum, ens.mean_n()) < 1e-10);
        prop_assert!(ens.var_n() >= -1e-12 * ens.second_moment_n());
        for o in &occ {
            prop_assert!(o.second + 1e-12 >= o.mean * o.mean);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pressure_is_convex_and_number_rises(v in variant(), beta in 0.3..2.0f64, mu in -1.0..1.5f64) {
        let (levels, volume) = small_box();
        let mu = if v == Variant::Free { -mu.abs() - 0.05 } else { mu };
        let lambda = if v == Variant::Free { 0.0 } else { 0.5 };
        let at = |m: f64| Ensemble::build(&levels, &ModelParams::new(v, lambda, beta, m).unwrap(), volume, &TruncationOptions::default()).unwrap();
        let h = 0.02;
        let (lo, mid, hi) = (at(mu - h), at(mu), at(mu + h));
        prop_assert!(lo.mean_n() < mid.mean_n() && mid.mean_n() < hi.mean_n());
        prop_assert!(hi.pressure() + lo.pressure() - 2.0 * mid.pressure() >= -1e-12 * mid.pressure().abs());
    }

    #[test]
    fn per_mode_term_lowers_the_pressure(beta in 0.3..2.0f64, mu in -1.0..1.5f64, lambda in 0.05..1.0f64) {
        let (levels, volume) = small_box();
        let p = |v| Ensemble::build(&levels, &ModelParams::new(v, lambda, beta, mu).unwrap(), volume, &TruncationOptions::default()).unwrap().pressure();
        prop_assert!(p(Variant::NonExtensive) <= p(Variant::MeanField));
    }
}

proptest! {
    #[test]
    fn bose_functions_are_monotone(beta in 0.1..5.0f64, a in -10.0..0.0f64, b in -10.0..0.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        prop_assert!(bose_pressure(lo, beta, 1.0, 3).unwrap() < bose_pressure(hi, beta, 1.0, 3).unwrap());
        prop_assert!(bose_density(lo, beta, 1.0, 3).unwrap() < bose_density(hi, beta, 1.0, 3).unwrap());
    }

    #[test]
    fn mean_field_pressure_is_the_variational_minimum(beta in 0.1..3.0f64, mu in -3.0..3.0f64, lambda in 0.05..2.0f64, trial in -5.0..0.0f64) {
        let mf = mf_pressure(mu, lambda, beta, 1.0, 3).unwrap();
        prop_assert!(mf.alpha_star <= 0.0);
        let objective = |a: f64| bose_pressure(a, beta, 1.0, 3).unwrap() + (mu - a).powi(2) / (4.0 * lambda);
        prop_assert!(objective(trial) >= mf.pressure - 1e-12 * mf.pressure.abs());
        if mu < 0.0 {
            prop_assert!(mf.pressure <= bose_pressure(mu, beta, 1.0, 3).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn shells_partition_the_cube(dim in 1usize..=4, cutoff in 1u32..=4, side in 1.0..20.0f64) {
        let spec = BoxSpec::new(dim, side, 1.0, cutoff).unwrap();
        let shells = enumerate_shells(&spec).unwrap();
        let total: u64 = shells.iter().map(|s| s.degeneracy).sum();
        prop_assert_eq!(total, (2 * cutoff as u64 + 1).pow(dim as u32));
        prop_assert!(shells.windows(2).all(|w| w[0].energy < w[1].energy));
    }
}
