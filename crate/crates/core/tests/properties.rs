mod common;

use molqca::dynamics::{integrate, relax_to_equilibrium, IntegratorConfig};
use molqca::energetics::{dissipation_report, energy_balance_residual, trapezoid_switch_energy};
use molqca::steady::{enumerate_steady_states, SolverOptions};
use molqca::waveform::{hysteresis_protocol, BiasWaveform};
use molqca::{BlochState64, ModelParams64};
use proptest::prelude::*;

fn ramp_run(
    lambda: f64,
    t_d: f64,
    k_t: f64,
    t_s: f64,
    d0: f64,
    d1: f64,
    s0: BlochState64,
) -> molqca::Trajectory64 {
    let p = ModelParams64::open(lambda, t_d, k_t).unwrap();
    let w = BiasWaveform::ramp(t_s, d0, d1).unwrap();
    integrate(s0, &w, &p, &IntegratorConfig::for_run(&p, t_s)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn open_runs_keep_every_invariant(
        lambda in 0.0..10.0f64,
        t_d in 0.5..50.0f64,
        k_t in 0.0..3.0f64,
        t_s in 1.0..30.0f64,
        d0 in -10.0..0.0f64,
        d1 in 0.5..10.0f64,
        theta in 0.0..std::f64::consts::PI,
        r in 0.0..1.0f64,
    ) {
        let s0 = BlochState64::new(r * theta.sin(), 0.0, r * theta.cos());
        let traj = ramp_run(lambda, t_d, k_t, t_s, d0, d1, s0);
        let st = traj.stats;
        prop_assert!(st.max_dissipator_trace < 1e-13);
        prop_assert!(st.max_norm <= 1.0 + 1e-9);
        prop_assert!(st.max_ligand_power < 1e-12);
        prop_assert!(energy_balance_residual(&traj).abs() < 1e-6);
        for w in traj.samples.windows(2) {
            prop_assert!(w[1].t > w[0].t);
        }
        for s in &traj.samples {
            let c = s.power;
            prop_assert!((c.p3 + c.p4).abs() < 1e-12);
            prop_assert!((c.p_total - (c.p_work - c.p_switch)).abs() < 1e-12 * (1.0 + c.p_work.abs()));
            prop_assert!(s.state.norm() <= 1.0 + 1e-9);
        }
        // Two quadratures of the switching power agree.
        let trap = trapezoid_switch_energy(&traj);
        prop_assert!((trap - traj.last().e_switch).abs() < 1e-3 * (1.0 + trap.abs()));
        let p = ModelParams64::open(lambda, t_d, k_t).unwrap();
        let rep = dissipation_report(&traj, &p, d1).unwrap();
        prop_assert_eq!(rep.e_diss, rep.e_switch + rep.e_excess);
    }

    #[test]
    fn relaxation_never_lands_on_the_repelling_branch(
        lambda in 3.0..10.0f64,
        z0 in 0.011..1.0f64,
        sign in prop::bool::ANY,
        x0 in -0.1..0.1f64,
    ) {
        let z0 = if sign { z0 } else { -z0 };
        let s0 = BlochState64::new(x0 * (1.0 - z0 * z0).sqrt(), 0.0, z0);
        let p = ModelParams64::open(lambda, 2.0, 0.5).unwrap();
        let rel = relax_to_equilibrium(s0, 0.0, &p, &IntegratorConfig::for_run(&p, f64::INFINITY), 5e4).unwrap();
        prop_assert!(rel.converged);
        let set = enumerate_steady_states(&p, 0.0, 60, 1, &SolverOptions::default()).unwrap();
        let hit = set.solutions.iter().find(|s| s.state.dist(&rel.state) < 1e-6);
        prop_assert!(hit.is_some(), "final {:?}", rel.state);
        prop_assert!(hit.unwrap().stable);
        prop_assert!(rel.state.z.abs() > 0.5);
    }
}

#[test]
fn isolated_purity_is_conserved() {
    for lambda in [0.0, 5.0] {
        let p = ModelParams64::isolated(lambda).unwrap();
        let w = BiasWaveform::ramp(1000.0, -25.0, 25.0).unwrap();
        let s0 = BlochState64::new(0.6, 0.0, 0.8);
        let traj = integrate(s0, &w, &p, &IntegratorConfig::for_run(&p, 1000.0)).unwrap();
        let drift = traj
            .samples
            .iter()
            .map(|s| (s.state.norm() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-8, "lambda {lambda}: drift {drift:e}");
        assert_eq!(traj.last().e_switch, 0.0);
    }
}

#[test]
fn halving_tolerances_barely_moves_the_reference_sweep() {
    let p = ModelParams64::open(10.0, 10.0, 1.0).unwrap();
    let w = hysteresis_protocol(-25.0, 25.0, 1000.0, 100.0).unwrap();
    let set = enumerate_steady_states(&p, -25.0, 50, 0, &SolverOptions::default()).unwrap();
    let s0 = set.solutions[0].state;
    let base = IntegratorConfig::for_run(&p, 1000.0).with_stride(0);
    let a = integrate(s0, &w, &p, &base).unwrap();
    let half = base.with_tolerances(base.rel_tol / 2.0, base.abs_tol / 2.0);
    let b = integrate(s0, &w, &p, &half).unwrap();
    let dz = (a.final_state().z - b.final_state().z).abs();
    assert!(dz < 1e-6, "{dz:e}");
}

#[test]
fn rabi_period_is_one_time_unit() {
    let p = ModelParams64::isolated(0.0).unwrap();
    let w = BiasWaveform::constant(5.0, 0.0).unwrap();
    let cfg = IntegratorConfig::for_run(&p, 5.0).with_tolerances(1e-11, 1e-13);
    let traj = integrate(BlochState64::new(0.0, 0.0, 1.0), &w, &p, &cfg).unwrap();
    // Downward zero crossings of z, linearly interpolated.
    let mut crossings = Vec::new();
    for w in traj.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.state.z > 0.0 && b.state.z <= 0.0 {
            crossings.push(a.t + (b.t - a.t) * a.state.z / (a.state.z - b.state.z));
        }
    }
    assert_eq!(crossings.len(), 5);
    let period = (crossings[4] - crossings[0]) / 4.0;
    assert!((period - 1.0).abs() < 1e-3, "{period}");
    for s in &traj.samples {
        let exact = (2.0 * std::f64::consts::PI * s.t).cos();
        assert!((s.state.z - exact).abs() < 1e-7);
    }
}
