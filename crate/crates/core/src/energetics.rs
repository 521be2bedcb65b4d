//! Power flow and energy bookkeeping for switching events.
//!
//! The power into the cell, `d⟨E⟩/dt`, splits into the bath channel
//! `Tr(𝔻H)`, the work done by the electrodes `Tr(ρ ∂H_E/∂t)` and the two
//! ligand channels `Tr(ρ ∂H_EL/∂t)`, `Tr(ρ ∂H_L/∂t)`, which cancel.

use crate::dynamics::{dissipator_bloch, Trajectory};
use crate::error::{Error, Result};
use crate::qmodel::{expected_energy, hbar, BlochState, HamiltonianParts, ModelParams};
use crate::scalar::Real;
use crate::steady::{enumerate_steady_states, solve_newton, solve_self_consistent, SolverOptions};

/// Instantaneous power channels, in γ/Tγ.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerChannels<T> {
    /// `d⟨E⟩/dt`
    pub p_total: T,
    /// Work by the drive, `Tr(ρ ∂H_E/∂t)`.
    pub p_work: T,
    /// Power flowing into the bath, `−Tr(𝔻H)`.
    pub p_switch: T,
    /// `Tr(ρ ∂H_EL/∂t) = −(λ/2)·z·dz/dt`
    pub p3: T,
    /// `Tr(ρ ∂H_L/∂t) = +(λ/2)·z·dz/dt`
    pub p4: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationReport<T> {
    /// Energy released to the bath during the sweep.
    pub e_switch: T,
    /// Energy above the steady state left at the end of the sweep.
    pub e_excess: T,
    /// `e_switch + e_excess`
    pub e_diss: T,
    pub beta: T,
}

pub fn power_channels<T: Real>(
    s: &BlochState<T>,
    ds_dt: &BlochState<T>,
    h: &HamiltonianParts<T>,
    d_delta_dt: T,
    p: &ModelParams<T>,
) -> PowerChannels<T> {
    let d = dissipator_bloch(s, h, p.t_d, p.k_t);
    let p_switch = -h.field.dot(&d);
    let p_work = d_delta_dt * T::half() * (s.z + T::one());
    let ligand = p.lambda * T::half() * s.z * ds_dt.z;
    let p3 = -ligand;
    let p4 = ligand;
    // Tr(ρ̇ H) + Tr(ρ ∂H/∂t); Tr(ρ̇ H) = b·ds/dt since ρ̇ is traceless.
    let p_total = h.field.dot(ds_dt) + p_work + p3 + p4;
    PowerChannels {
        p_total,
        p_work,
        p_switch,
        p3,
        p4,
    }
}

/// `β = 2πγ²T_s / (ħ|Δ_f − Δ_i|)`, with `T_s` in Tγ.
pub fn adiabaticity_beta<T: Real>(p: &ModelParams<T>, t_s: T, delta_i: T, delta_f: T) -> Result<T> {
    let range = (delta_f - delta_i).abs();
    if !(range > T::zero()) {
        return Err(Error::Domain("sweep range must be nonzero".into()));
    }
    if !(t_s > T::zero()) {
        return Err(Error::Domain("switching time must be positive".into()));
    }
    Ok(T::TAU() * p.gamma * p.gamma * t_s / (hbar::<T>() * range))
}

/// Which ground-state energy an isolated excess energy is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundReference {
    /// `E1` of the Hamiltonian at the realized final polarization.
    #[default]
    Realized,
    /// `E1` of the self-consistent zero-temperature Hamiltonian on the
    /// branch nearest the final state.
    SelfConsistent,
}

/// `⟨E⟩(T_s) − E1(T_s)` at the end of an isolated run.
pub fn excess_energy_isolated<T: Real>(
    traj: &Trajectory<T>,
    p: &ModelParams<T>,
    reference: GroundReference,
) -> Result<T> {
    let last = traj.last();
    match reference {
        GroundReference::Realized => Ok(last.e_expected - last.e1),
        GroundReference::SelfConsistent => {
            let cold = p.with_k_t(T::zero());
            let ss = nearest_steady_state(&cold, last.delta, &last.state)?;
            let h = HamiltonianParts::assemble(&cold, last.delta, ss.z);
            Ok(last.e_expected - h.eigvals.0)
        }
    }
}

/// Self-consistent steady state at `delta` closest (Euclidean Bloch
/// distance) to `state`.
pub fn nearest_steady_state<T: Real>(
    p: &ModelParams<T>,
    delta: T,
    state: &BlochState<T>,
) -> Result<BlochState<T>> {
    let opts = SolverOptions::default();
    let mut candidates: Vec<BlochState<T>> = enumerate_steady_states(p, delta, 64, 0, &opts)?
        .solutions
        .into_iter()
        .map(|s| s.state)
        .collect();
    let guess = BlochState::new(state.x, T::zero(), state.z);
    let guess = if guess.norm() > T::one() {
        guess.scale(T::one() / guess.norm())
    } else {
        guess
    };
    let local = solve_self_consistent(p, delta, guess, &opts)?;
    if local.converged {
        candidates.push(local.state);
    }
    let newton = solve_newton(p, delta, state.z, &opts);
    if newton.converged {
        candidates.push(newton.state);
    }
    candidates
        .into_iter()
        .min_by(|a, b| {
            a.dist(state)
                .partial_cmp(&b.dist(state))
                .expect("finite distance")
        })
        .ok_or_else(|| Error::Domain(format!("no converged steady state at delta = {delta}")))
}

/// `⟨E⟩(T_s) − ⟨E_ss⟩(T_s)`, the steady state taken on the branch nearest
/// the final state.
pub fn excess_energy_open<T: Real>(
    final_state: &BlochState<T>,
    p: &ModelParams<T>,
    delta_final: T,
) -> Result<T> {
    let e = expected_energy(
        final_state,
        &HamiltonianParts::assemble(p, delta_final, final_state.z),
    );
    let ss = nearest_steady_state(p, delta_final, final_state)?;
    let e_ss = expected_energy(&ss, &HamiltonianParts::assemble(p, delta_final, ss.z));
    Ok(e - e_ss)
}

/// Dissipation budget of a switching run covering `[0, T_s]`.
pub fn dissipation_report<T: Real>(
    traj: &Trajectory<T>,
    p: &ModelParams<T>,
    delta_final: T,
) -> Result<DissipationReport<T>> {
    let first = traj.first();
    let last = traj.last();
    let e_switch = last.e_switch;
    let e_excess = excess_energy_open(&last.state, p, delta_final)?;
    Ok(DissipationReport {
        e_switch,
        e_excess,
        e_diss: e_switch + e_excess,
        beta: adiabaticity_beta(p, last.t - first.t, first.delta, delta_final)?,
    })
}

/// Trapezoidal `∫ p_switch dt` over the recorded samples.
pub fn trapezoid_switch_energy<T: Real>(traj: &Trajectory<T>) -> T {
    traj.samples
        .windows(2)
        .map(|w| (w[1].t - w[0].t) * (w[0].power.p_switch + w[1].power.p_switch) * T::half())
        .fold(T::zero(), |a, b| a + b)
}

/// `⟨E⟩(end) − ⟨E⟩(start) − ∫(p_work − p_switch) dt`.
pub fn energy_balance_residual<T: Real>(traj: &Trajectory<T>) -> T {
    let (a, b) = (traj.first(), traj.last());
    (b.e_expected - a.e_expected) - ((b.e_work - a.e_work) - (b.e_switch - a.e_switch))
}
