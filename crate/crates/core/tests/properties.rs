use critical_otto::analysis::{analytic_excess_energy, analytic_excess_energy_continuum, log_space};
use critical_otto::cycle::{run_cycle, CycleConfig, PowerDenominator};
use critical_otto::quantum::{
    adiabatic_map, eigen_populations, eigenvectors, evolve_mode, mode_energy_expectation, thermal_mode_state,
    IntegratorOptions, ModeState, Scheme,
};
use critical_otto::{momentum_grid, tfim_mode_hamiltonian, RampProtocol};
use proptest::prelude::*;

fn reference(t_cold: f64, tau2: f64) -> CycleConfig {
    CycleConfig::reference(t_cold, tau2)
}

#[test]
fn halving_the_step_changes_final_states_below_1e_8() {
    let cfg = reference(1.0, 100.0);
    let coarse = IntegratorOptions::default();
    let fine = IntegratorOptions { dt_max: coarse.dt_max / 2.0, ..coarse };
    let mut worst = 0.0f64;
    for &k in &momentum_grid(cfg.l).unwrap() {
        for (ramp, start, t) in [
            (cfg.hot_ramp().unwrap(), cfg.h1, cfg.t_hot),
            (RampProtocol::new(cfg.h2, cfg.h1, cfg.tau2).unwrap(), cfg.h2, cfg.t_cold),
        ] {
            let s = thermal_mode_state(&tfim_mode_hamiltonian(k, start), t).unwrap();
            let f = |h: f64| tfim_mode_hamiltonian(k, h);
            let a = evolve_mode(&s, &ramp, f, &coarse).unwrap();
            let b = evolve_mode(&s, &ramp, f, &fine).unwrap();
            worst = worst.max(a.block.sub(&b.block).max_abs());
        }
    }
    assert!(worst < 1e-8, "step halving moved an entry by {worst:e}");
}

#[test]
fn rk4_crosscheck_agrees_on_a_full_cycle() {
    let mut cfg = reference(1.0, 30.0);
    let exact = run_cycle(&cfg).unwrap();
    cfg.integrator.scheme = Scheme::Rk4Crosscheck;
    let rk4 = run_cycle(&cfg).unwrap();
    assert!(((exact.work - rk4.work) / exact.work).abs() < 1e-7);
    assert!((exact.work_deficit() - rk4.work_deficit()).abs() < 1e-4);
}

#[test]
fn work_magnitude_grows_with_tau2() {
    let taus = log_space(1.0, 1000.0, 16).unwrap();
    let w: Vec<f64> = taus.iter().map(|&t| run_cycle(&reference(1.0, t)).unwrap().work.abs()).collect();
    for (i, pair) in w.windows(2).enumerate() {
        assert!(pair[1] >= pair[0] - 1e-6, "|W| drops from {} to {} between tau2 {} and {}", pair[0], pair[1], taus[i], taus[i + 1]);
    }
}

/// The hot-stroke residual is the ground-start excess energy scaled by
/// tanh(eps(h1) / 2 T_H), mode by mode.
#[test]
fn hot_stroke_residual_is_tanh_scaled_ground_excess() {
    let cfg = reference(1.0, 100.0);
    let r = run_cycle(&cfg).unwrap();
    let opts = IntegratorOptions::default();
    let ramp = cfg.hot_ramp().unwrap();
    let mut predicted = 0.0;
    for &k in &momentum_grid(cfg.l).unwrap() {
        let h1 = tfim_mode_hamiltonian(k, cfg.h1);
        let h2 = tfim_mode_hamiltonian(k, cfg.h2);
        let g = evolve_mode(&ModeState::ground(&h1), &ramp, |h| tfim_mode_hamiltonian(k, h), &opts).unwrap();
        let ground_excess = mode_energy_expectation(&g, &h2) - mode_energy_expectation(&ModeState::ground(&h2), &h2);
        predicted += ground_excess * (h1.gap() / (2.0 * cfg.t_hot)).tanh();
    }
    assert!((r.e_c_residual - predicted).abs() < 1e-9 * predicted.abs().max(1.0));
    assert!(r.e_c_residual > 0.0);
}

#[test]
fn sudden_sweep_projects_the_start_ground_state() {
    let opts = IntegratorOptions::default();
    for &k in &momentum_grid(100).unwrap()[..10] {
        let start = tfim_mode_hamiltonian(k, 1.0);
        let end = tfim_mode_hamiltonian(k, 10.0);
        let ramp = RampProtocol::new(1.0, 10.0, 1e-6).unwrap();
        let s = evolve_mode(&ModeState::ground(&start), &ramp, |h| tfim_mode_hamiltonian(k, h), &opts).unwrap();
        let (g0, _) = eigenvectors(&start);
        let (_, e1) = eigenvectors(&end);
        let overlap = g0[0] * e1[0] + g0[1] * e1[1];
        let p = eigen_populations(&s, &end).0[3];
        assert!((p - overlap * overlap).abs() < 1e-6, "k {k}: {p} vs {}", overlap * overlap);
    }
}

#[test]
fn discrete_and_continuum_mode_sums_agree() {
    for (tc, tau2) in [(1.0, 100.0), (10.0, 30.0), (0.1, 10.0)] {
        let cfg = reference(tc, tau2);
        let d = analytic_excess_energy(&cfg).unwrap();
        let c = analytic_excess_energy_continuum(&cfg).unwrap();
        assert!(((d - c) / c).abs() < 0.01, "T_C {tc}, tau2 {tau2}: {d} vs {c}");
    }
}

#[test]
fn thermal_transport_energy_matches_population_bookkeeping() {
    let (k, tc) = (0.3, 0.7);
    let h2 = tfim_mode_hamiltonian(k, 1.0);
    let h1 = tfim_mode_hamiltonian(k, 10.0);
    let s = adiabatic_map(&thermal_mode_state(&h2, tc).unwrap(), &h2, &h1).unwrap();
    let (e1, e2) = (h1.gap(), h2.gap());
    let b = 1.0 / tc;
    let z = 2.0 + (b * e2).exp() + (-b * e2).exp();
    let expected = e1 * ((-b * e2).exp() - (b * e2).exp()) / z;
    assert!((mode_energy_expectation(&s, &h1) - expected).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn excess_energy_is_never_negative(
        half_l in 1usize..6,
        h1 in -6.0f64..6.0,
        h2 in -6.0f64..6.0,
        t_cold in 0.05f64..5.0,
        extra in 0.0f64..50.0,
        tau1 in 0.05f64..5.0,
        tau2 in 0.05f64..5.0,
    ) {
        let cfg = CycleConfig {
            l: 2 * half_l,
            h1,
            h2,
            t_hot: t_cold + extra,
            t_cold,
            tau1,
            tau2,
            integrator: IntegratorOptions { dt_max: 1e-2, ..IntegratorOptions::default() },
            power_denominator: PowerDenominator::Tau2Only,
        };
        let r = run_cycle(&cfg).unwrap();
        prop_assert!(r.work_deficit() >= -1e-9);
        prop_assert!(r.e_a_excess >= -1e-9 && r.e_c_residual >= -1e-9);
    }
}
