//! Self-consistent thermal steady states.
//!
//! The steady state satisfies `ρ = exp(−H(ρ)/kT) / Tr exp(−H(ρ)/kT)`, where
//! the Hamiltonian depends on `ρ` through `⟨σz⟩`. The map
//! `z ↦ G_z(z) = ⟨σz⟩ of Gibbs(H(z))` is one-dimensional, so the full
//! fixed-point problem reduces to finding the roots of `g(z) = z − G_z(z)`
//! on `[−1, 1]`; the remaining Bloch components follow from `G`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qmodel::{expected_energy, BlochState, HamiltonianParts, ModelParams};
use crate::scalar::Real;

/// Two solutions closer than this (Euclidean, in Bloch space) are the same.
pub const DEDUP_RADIUS: f64 = 0.02;

/// Gibbs state of a fixed Hamiltonian as a Bloch vector.
///
/// The populations of the eigenvectors are `∝ exp(−E_k/kT)`, so the Bloch
/// vector points along the ground-state direction with length
/// `p1 − p2 = tanh((E2 − E1)/(2kT))`. At `kT = 0` this is the ground-state
/// projector.
pub fn gibbs_state<T: Real>(h: &HamiltonianParts<T>, k_t: T) -> BlochState<T> {
    let n = h.ground_direction();
    if k_t <= T::zero() {
        return n;
    }
    n.scale((h.gap() / (T::two() * k_t)).tanh())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    pub max_iter: usize,
    /// Convergence threshold on the Bloch ∞-norm.
    pub tol: T,
    /// Mixing factor α ∈ (0, 1]; `s ← α·G(s) + (1 − α)·s`. 1 is plain iteration.
    pub mixing: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: T::lit(1e-10),
            mixing: T::one(),
        }
    }
}

impl<T: Real> SolverOptions<T> {
    fn validate(&self) -> Result<()> {
        if !(self.mixing > T::zero() && self.mixing <= T::one()) {
            return Err(Error::Domain(format!(
                "mixing factor {} outside (0, 1]",
                self.mixing
            )));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadySolution<T> {
    /// Steady state, `y = 0`.
    pub state: BlochState<T>,
    /// `⟨E⟩ = Tr(ρ H(ρ))`.
    pub energy: T,
    pub iterations: usize,
    pub converged: bool,
    /// `‖s − Gibbs(H(s))‖∞`
    pub residual: T,
    /// `|dG_z/dz| < 1`: attracting under plain iteration.
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSet<T> {
    /// Distinct converged solutions, sorted by `z` descending.
    pub solutions: Vec<SteadySolution<T>>,
    pub bias: T,
    pub n_starts: usize,
    /// Starts for which neither iteration converged.
    pub n_unconverged: usize,
}

/// The self-consistent map `s ↦ Gibbs(H(Δ, s.z))`.
pub fn gibbs_map<T: Real>(p: &ModelParams<T>, delta: T, z: T) -> BlochState<T> {
    gibbs_state(&HamiltonianParts::assemble(p, delta, z), p.k_t)
}

/// `dG_z/dz` in closed form.
///
/// With `u = (λz − Δ)/2`, `r = √(γ² + u²)`: `G_z = tanh(r/kT)·u/r`, so
/// `dG_z/dz = (λ/2)·[tanh(r/kT)·γ²/r³ + sech²(r/kT)·u²/(kT·r²)]`.
pub fn gibbs_z_slope<T: Real>(p: &ModelParams<T>, delta: T, z: T) -> T {
    let u = (p.lambda * z - delta) * T::half();
    let r = p.gamma.hypot(u);
    let geom = p.gamma * p.gamma / (r * r * r);
    let du = if p.k_t > T::zero() {
        let a = r / p.k_t;
        let th = a.tanh();
        th * geom + (T::one() - th * th) * u * u / (p.k_t * r * r)
    } else {
        geom
    };
    p.lambda * T::half() * du
}

fn finish<T: Real>(
    p: &ModelParams<T>,
    delta: T,
    state: BlochState<T>,
    iterations: usize,
    tol: T,
) -> SteadySolution<T> {
    let h = HamiltonianParts::assemble(p, delta, state.z);
    let residual = state.dist_inf(&gibbs_state(&h, p.k_t));
    let finite = residual.is_finite() && state.norm() <= T::one() + T::lit(1e-9);
    SteadySolution {
        state,
        energy: expected_energy(&state, &h),
        iterations,
        converged: finite && residual < tol,
        residual,
        stable: gibbs_z_slope(p, delta, state.z).abs() < T::one(),
    }
}

/// Fixed-point iteration `s_{n+1} = α·G(s_n) + (1 − α)·s_n` from `guess`.
///
/// Stops when successive iterates differ by less than `tol` in the ∞-norm or
/// after `max_iter` steps. Non-convergence is reported through the flag.
pub fn solve_self_consistent<T: Real>(
    p: &ModelParams<T>,
    delta: T,
    guess: BlochState<T>,
    opts: &SolverOptions<T>,
) -> Result<SteadySolution<T>> {
    opts.validate()?;
    let guess = BlochState::new(guess.x, T::zero(), guess.z);
    if !(guess.norm() <= T::one() + T::lit(1e-9)) {
        return Err(Error::InvalidState(format!(
            "initial guess ({}, {}) outside the unit disk",
            guess.x, guess.z
        )));
    }
    let a = opts.mixing;
    let mut s = guess;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let next = gibbs_map(p, delta, s.z).scale(a) + s.scale(T::one() - a);
        iterations += 1;
        let step = next.dist_inf(&s);
        s = next;
        if step < opts.tol {
            break;
        }
    }
    Ok(finish(p, delta, s, iterations, opts.tol))
}

/// Newton iteration on `g(z) = z − G_z(z)` from `z0`.
///
/// Converges to attracting and repelling fixed points alike; the enumerator
/// uses it alongside the plain iteration to reach unstable roots.
pub fn solve_newton<T: Real>(
    p: &ModelParams<T>,
    delta: T,
    z0: T,
    opts: &SolverOptions<T>,
) -> SteadySolution<T> {
    let one = T::one();
    let mut z = z0.max(-one).min(one);
    let mut iterations = 0;
    // Newton's own step size shrinks quadratically; stop well below `tol`
    // so the returned state's residual clears it.
    let step_tol = opts.tol * T::lit(1e-2);
    while iterations < opts.max_iter.min(200) {
        iterations += 1;
        let g = z - gibbs_map(p, delta, z).z;
        let dg = one - gibbs_z_slope(p, delta, z);
        if dg == T::zero() || !dg.is_finite() {
            break;
        }
        let next = (z - g / dg).max(-one).min(one);
        let step = (next - z).abs();
        z = next;
        if step < step_tol {
            break;
        }
    }
    finish(p, delta, gibbs_map(p, delta, z), iterations, opts.tol)
}

/// Starting points drawn uniformly on the unit disk of the `(x, z)` plane.
pub fn random_starts<T: Real>(n_starts: usize, seed: u64) -> Vec<BlochState<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_starts)
        .map(|_| {
            let r = rng.gen::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            BlochState::new(T::lit(r * theta.cos()), T::zero(), T::lit(r * theta.sin()))
        })
        .collect()
}

/// Multistart enumeration of coexisting steady states at bias `delta`.
///
/// Each start is solved by plain fixed-point iteration and by Newton
/// iteration; converged results are merged within [`DEDUP_RADIUS`]. The
/// result depends only on `(n_starts, seed)`, not on scheduling.
pub fn enumerate_steady_states<T: Real>(
    p: &ModelParams<T>,
    delta: T,
    n_starts: usize,
    seed: u64,
    opts: &SolverOptions<T>,
) -> Result<SolutionSet<T>> {
    if n_starts == 0 {
        return Err(Error::Domain("n_starts must be at least 1".into()));
    }
    opts.validate()?;
    let starts = random_starts::<T>(n_starts, seed);
    let per_start: Vec<[SteadySolution<T>; 2]> = starts
        .par_iter()
        .map(|s| {
            let plain = solve_self_consistent(p, delta, *s, opts)?;
            let newton = solve_newton(p, delta, s.z, opts);
            Ok([plain, newton])
        })
        .collect::<Result<_>>()?;

    let radius = T::lit(DEDUP_RADIUS);
    let mut solutions: Vec<SteadySolution<T>> = Vec::new();
    let mut n_unconverged = 0;
    for pair in &per_start {
        if !pair.iter().any(|s| s.converged) {
            n_unconverged += 1;
        }
        for sol in pair.iter().filter(|s| s.converged) {
            if solutions.iter().all(|k| k.state.dist(&sol.state) > radius) {
                solutions.push(*sol);
            }
        }
    }
    // Polish to machine precision; the iteration's stopping rule leaves a
    // residual of order `tol`.
    for sol in solutions.iter_mut() {
        let polished = solve_newton(p, delta, sol.state.z, opts);
        if polished.converged && polished.state.dist(&sol.state) <= radius {
            *sol = SteadySolution {
                iterations: sol.iterations,
                ..polished
            };
        }
    }
    solutions.sort_by(|a, b| b.state.z.partial_cmp(&a.state.z).expect("finite z"));
    debug_assert!(solutions.len() <= 8);
    Ok(SolutionSet {
        solutions,
        bias: delta,
        n_starts,
        n_unconverged,
    })
}

/// One [`SolutionSet`] per bias value.
pub fn steady_polarization_curve<T: Real>(
    p: &ModelParams<T>,
    deltas: &[T],
    n_starts: usize,
    seed: u64,
    opts: &SolverOptions<T>,
) -> Result<Vec<SolutionSet<T>>> {
    if deltas.is_empty() {
        return Err(Error::Domain("bias list is empty".into()));
    }
    deltas
        .iter()
        .map(|&d| enumerate_steady_states(p, d, n_starts, seed, opts))
        .collect()
}
