mod common;

use common::{linear_gibbs, steady_roots, thermal_energy, thermal_z, STEADY_GRID};
use molqca::steady::{enumerate_steady_states, solve_self_consistent, SolverOptions};
use molqca::{BlochState64, ModelParams64};

#[test]
fn multistart_matches_bisection_on_grid() {
    let opts = SolverOptions::default();
    for &(lambda, k_t, delta) in &STEADY_GRID {
        let p = ModelParams64::open(lambda, 10.0, k_t).unwrap();
        let set = enumerate_steady_states(&p, delta, 100, 7, &opts).unwrap();
        let roots = steady_roots(lambda, k_t, delta);
        let found: Vec<f64> = set.solutions.iter().map(|s| s.state.z).collect();
        assert_eq!(
            found.len(),
            roots.len(),
            "(λ, kT, Δ) = ({lambda}, {k_t}, {delta}): {found:?} vs {roots:?}"
        );
        for (sol, &z) in set.solutions.iter().zip(&roots) {
            assert!((sol.state.z - z).abs() < 1e-8, "{} vs {z}", sol.state.z);
            assert!(sol.state.y.abs() < 1e-15);
            let e = thermal_energy(lambda, k_t, delta, z);
            assert!(
                (sol.energy - e).abs() < 1e-8,
                "energy {} vs {e}",
                sol.energy
            );
            let h = 1e-6;
            let slope = (thermal_z(lambda, k_t, delta, z + h)
                - thermal_z(lambda, k_t, delta, z - h))
                / (2.0 * h);
            assert_eq!(sol.stable, slope.abs() < 1.0, "stability at z = {z}");
        }
    }
}

#[test]
fn uncoupled_solver_matches_closed_form() {
    let opts = SolverOptions::default();
    for k_t in [0.0, 0.1, 1.0, 3.0, 10.0] {
        for delta in [-25.0, -3.0, -0.4, 0.0, 1.0, 7.0] {
            let p = ModelParams64::open(0.0, 10.0, k_t).unwrap();
            let s =
                solve_self_consistent(&p, delta, BlochState64::new(0.3, 0.0, -0.2), &opts).unwrap();
            let (x, z) = linear_gibbs(k_t, delta);
            assert!(s.converged);
            assert!((s.state.x - x).abs() < 1e-10 && (s.state.z - z).abs() < 1e-10);
        }
    }
}

#[test]
fn oracle_is_self_consistent() {
    for &(lambda, k_t, delta) in &STEADY_GRID {
        for z in steady_roots(lambda, k_t, delta) {
            assert!((thermal_z(lambda, k_t, delta, z) - z).abs() < 1e-12);
        }
    }
}
