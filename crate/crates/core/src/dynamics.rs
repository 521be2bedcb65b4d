//! Time evolution of the nonlinear Lindblad equation on the Bloch vector.
//!
//! The Hamiltonian is rebuilt from the current `⟨σz⟩` at every stage of
//! the integrator, and the thermal Lindblad operators are taken in its
//! instantaneous eigenbasis: `L1 = √(1/T_d)|u1⟩⟨u2|` (decay) and
//! `L2 = √(1/T_d)·e^{−(E2−E1)/2kT}|u2⟩⟨u1|` (thermal excitation).
//!
//! With `H = h0·I + b·σ` the equation of motion for the Bloch vector is
//! `ds/dt = (2/ħ)·b × s + d(s)`, where the dissipator image `d` relaxes the
//! component along the ground direction `n = −b/|b|` towards
//! `tanh((E2−E1)/2kT)` at rate `Γ↓ + Γ↑` and damps the transverse part at
//! half that rate.

use crate::energetics::{power_channels, PowerChannels};
use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::qmodel::{expected_energy, hbar, BlochState, HamiltonianParts, ModelParams, STATE_TOL};
use crate::scalar::Real;
use crate::waveform::BiasWaveform;

/// Steps below this size (in Tγ) abort the integration.
pub const DT_UNDERFLOW: f64 = 1e-12;

/// `(rel_tol, abs_tol)` used by [`IntegratorConfig::for_run`] when `T_d = ∞`.
pub const ISOLATED_TOLERANCES: (f64, f64) = (1e-12, 1e-14);

/// Threshold on `‖ds/dt‖` (per Tγ) for [`relax_to_equilibrium`].
pub const RELAX_RATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub dt_max: T,
    pub rel_tol: T,
    pub abs_tol: T,
    /// Keep every `record_stride`-th accepted step; 0 keeps only the first
    /// and last sample.
    pub record_stride: usize,
    pub max_steps: usize,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            dt_max: T::lit(0.05),
            rel_tol: T::lit(1e-9),
            abs_tol: T::lit(1e-11),
            record_stride: 1,
            max_steps: 500_000_000,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    /// `dt_max = min(Tγ/20, T_d/20, T_s/1000)`. Isolated runs get
    /// [`ISOLATED_TOLERANCES`] so the Bloch norm drifts by < 1e-8 over
    /// 1000 Tγ.
    pub fn for_run(p: &ModelParams<T>, t_s: T) -> Self {
        let mut dt = T::lit(0.05);
        if !p.is_isolated() {
            dt = dt.min(p.t_d / T::lit(20.0));
        }
        if t_s > T::zero() && t_s.is_finite() {
            dt = dt.min(t_s / T::lit(1000.0));
        }
        let cfg = Self {
            dt_max: dt,
            ..Self::default()
        };
        if p.is_isolated() {
            let (r, a) = ISOLATED_TOLERANCES;
            cfg.with_tolerances(T::lit(r), T::lit(a))
        } else {
            cfg
        }
    }

    pub fn with_tolerances(self, rel_tol: T, abs_tol: T) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..self
        }
    }

    pub fn with_stride(self, record_stride: usize) -> Self {
        Self {
            record_stride,
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt_max > T::zero()) || !(self.rel_tol > T::zero()) || !(self.abs_tol > T::zero())
        {
            return Err(Error::Domain(
                "integrator needs dt_max, rel_tol and abs_tol > 0".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded instant of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub delta: T,
    pub state: BlochState<T>,
    /// `⟨E⟩ = Tr(ρH)`
    pub e_expected: T,
    pub e1: T,
    pub e2: T,
    pub power: PowerChannels<T>,
    /// `∫ p_switch dt` from the start of the run.
    pub e_switch: T,
    /// `∫ p_work dt` from the start of the run.
    pub e_work: T,
}

/// Diagnostics gathered over every accepted step, recorded or not.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest Bloch norm at an accepted step (before any clipping).
    pub max_norm: f64,
    /// Largest `|Tr 𝔻|` of the matrix dissipator at an accepted step.
    pub max_dissipator_trace: f64,
    /// Largest `|p3 + p4|`.
    pub max_ligand_power: f64,
    /// Accepted steps whose norm exceeded `1 + 1e-9` and were clipped.
    pub renormalizations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub samples: Vec<Sample<T>>,
    pub stats: RunStats,
}

impl<T: Real> Trajectory<T> {
    pub fn first(&self) -> &Sample<T> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<T> {
        &self.samples[self.samples.len() - 1]
    }

    pub fn final_state(&self) -> BlochState<T> {
        self.last().state
    }

    /// Sample closest in time to `t`.
    pub fn nearest(&self, t: T) -> &Sample<T> {
        let i = self.samples.partition_point(|s| s.t < t);
        let i = i.min(self.samples.len() - 1);
        if i > 0 && (self.samples[i - 1].t - t).abs() <= (self.samples[i].t - t).abs() {
            &self.samples[i - 1]
        } else {
            &self.samples[i]
        }
    }

    /// Polarization linearly interpolated at time `t`.
    pub fn polarization_at(&self, t: T) -> T {
        let s = &self.samples;
        let i = s.partition_point(|x| x.t < t);
        if i == 0 {
            return s[0].state.z;
        }
        if i >= s.len() {
            return s[s.len() - 1].state.z;
        }
        let (a, b) = (&s[i - 1], &s[i]);
        let f = (t - a.t) / (b.t - a.t);
        a.state.z + (b.state.z - a.state.z) * f
    }
}

/// Thermal Lindblad operators in the instantaneous eigenbasis of `h`.
/// Both vanish for `T_d = ∞`; `L2` vanishes for `kT = 0`.
pub fn lindblad_ops<T: Real>(h: &HamiltonianParts<T>, t_d: T, k_t: T) -> (Mat2<T>, Mat2<T>) {
    if t_d.is_infinite() {
        return (Mat2::zero(), Mat2::zero());
    }
    let amp = (T::one() / t_d).sqrt();
    let [u1, u2] = h.eigvecs;
    let l1 = Mat2::outer(u1, u2).scale(amp);
    let l2 = if k_t > T::zero() {
        let boltz = (-h.gap() / (T::two() * k_t)).exp();
        Mat2::outer(u2, u1).scale(amp * boltz)
    } else {
        Mat2::zero()
    };
    (l1, l2)
}

/// Decay and excitation rates `(Γ↓, Γ↑)`.
fn rates<T: Real>(gap: T, t_d: T, k_t: T) -> (T, T) {
    if t_d.is_infinite() {
        return (T::zero(), T::zero());
    }
    let down = T::one() / t_d;
    let up = if k_t > T::zero() {
        down * (-gap / k_t).exp()
    } else {
        T::zero()
    };
    (down, up)
}

/// `𝔻 = Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})` as a 2×2 matrix.
pub fn dissipator<T: Real>(
    s: &BlochState<T>,
    h: &HamiltonianParts<T>,
    t_d: T,
    k_t: T,
) -> Result<Mat2<T>> {
    let rho = crate::qmodel::bloch_to_density(s)?;
    Ok(dissipator_matrix(&rho, h, t_d, k_t))
}

fn dissipator_matrix<T: Real>(rho: &Mat2<T>, h: &HamiltonianParts<T>, t_d: T, k_t: T) -> Mat2<T> {
    let (l1, l2) = lindblad_ops(h, t_d, k_t);
    let mut d = Mat2::zero();
    for l in [l1, l2] {
        let ld = l.adjoint();
        let ldl = ld * l;
        d = d + l * *rho * ld - ldl.anticommutator(rho).scale(T::half());
    }
    d
}

/// Bloch-vector image of the dissipator, `d_k = Tr(𝔻 σ_k)`, in closed form.
pub fn dissipator_bloch<T: Real>(
    s: &BlochState<T>,
    h: &HamiltonianParts<T>,
    t_d: T,
    k_t: T,
) -> BlochState<T> {
    let (down, up) = rates(h.gap(), t_d, k_t);
    let total = down + up;
    if total == T::zero() {
        return BlochState::zero();
    }
    let n = h.ground_direction();
    let par = s.dot(&n);
    let perp = *s - n.scale(par);
    let target = (down - up) / total;
    perp.scale(-total * T::half()) - n.scale(total * (par - target))
}

/// Commutator part of the motion, `(2/ħ)·b × s`.
fn precession<T: Real>(s: &BlochState<T>, h: &HamiltonianParts<T>) -> BlochState<T> {
    h.field.cross(s).scale(T::two() / hbar::<T>())
}

/// `ds/dt` at `(s, t)` for the given drive.
pub fn derivative<T: Real>(
    s: &BlochState<T>,
    t: T,
    w: &BiasWaveform<T>,
    p: &ModelParams<T>,
) -> Result<BlochState<T>> {
    let (delta, _) = w.eval(t)?;
    let h = HamiltonianParts::assemble(p, delta, s.z);
    Ok(rhs(s, &h, p))
}

#[inline]
fn rhs<T: Real>(s: &BlochState<T>, h: &HamiltonianParts<T>, p: &ModelParams<T>) -> BlochState<T> {
    precession(s, h) + dissipator_bloch(s, h, p.t_d, p.k_t)
}

/// Integrator state vector: Bloch components and the two running
/// energy integrals `∫p_switch dt`, `∫p_work dt`.
type Y<T> = [T; 5];

struct Eval<T> {
    dy: Y<T>,
    delta: T,
    d_delta: T,
    h: HamiltonianParts<T>,
}

fn eval_point<T: Real>(t: T, y: &Y<T>, w: &BiasWaveform<T>, p: &ModelParams<T>) -> Eval<T> {
    let (delta, d_delta) = w.eval_unchecked(t);
    let s = BlochState::new(y[0], y[1], y[2]);
    let h = HamiltonianParts::assemble(p, delta, s.z);
    let d = dissipator_bloch(&s, &h, p.t_d, p.k_t);
    let ds = precession(&s, &h) + d;
    let p_switch = -h.field.dot(&d);
    let p_work = d_delta * T::half() * (s.z + T::one());
    Eval {
        dy: [ds.x, ds.y, ds.z, p_switch, p_work],
        delta,
        d_delta,
        h,
    }
}

fn make_sample<T: Real>(t: T, y: &Y<T>, e: &Eval<T>, p: &ModelParams<T>) -> Sample<T> {
    let state = BlochState::new(y[0], y[1], y[2]);
    let ds = BlochState::new(e.dy[0], e.dy[1], e.dy[2]);
    Sample {
        t,
        delta: e.delta,
        state,
        e_expected: expected_energy(&state, &e.h),
        e1: e.h.eigvals.0,
        e2: e.h.eigvals.1,
        power: power_channels(&state, &ds, &e.h, e.d_delta, p),
        e_switch: y[3],
        e_work: y[4],
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights are the last row of A; these are 5th − 4th order.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Outcome of [`integrate_until`].
#[derive(Debug, Clone, PartialEq)]
pub struct Run<T> {
    pub trajectory: Trajectory<T>,
    /// The stop predicate fired before the end of the waveform.
    pub stopped_early: bool,
}

/// Integrates the nonlinear Lindblad equation over the whole waveform.
pub fn integrate<T: Real>(
    s0: BlochState<T>,
    w: &BiasWaveform<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    integrate_until(s0, w, p, cfg, |_| false).map(|r| r.trajectory)
}

/// Like [`integrate`], but stops at the first accepted step where `stop`
/// returns true. `stop` is also checked at `t = 0`.
pub fn integrate_until<T: Real>(
    s0: BlochState<T>,
    w: &BiasWaveform<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    mut stop: impl FnMut(&Sample<T>) -> bool,
) -> Result<Run<T>> {
    cfg.validate()?;
    p.validate()?;
    s0.validate()?;

    let t_end = w.total_duration();
    let boundaries = w.boundaries();
    let mut next_boundary = 1;

    let mut t = T::zero();
    let mut y: Y<T> = [s0.x, s0.y, s0.z, T::zero(), T::zero()];
    let mut k1 = eval_point(t, &y, w, p);
    let mut stats = RunStats {
        max_norm: s0.norm().as_f64(),
        ..RunStats::default()
    };
    let first = make_sample(t, &y, &k1, p);
    let mut samples = vec![first];
    if stop(&first) {
        return Ok(Run {
            trajectory: Trajectory { samples, stats },
            stopped_early: true,
        });
    }

    let underflow = T::lit(DT_UNDERFLOW);
    let mut h = cfg.dt_max.min(T::lit(1e-3)).min(t_end);
    let mut stride_count = 0usize;
    let c: [T; 7] = C.map(T::lit);
    let e: [T; 7] = E.map(T::lit);
    let a: [[T; 6]; 7] = A.map(|row| row.map(T::lit));

    while t < t_end {
        if stats.accepted >= cfg.max_steps {
            return Err(Error::StepLimit(cfg.max_steps));
        }
        while next_boundary < boundaries.len() && boundaries[next_boundary] <= t {
            next_boundary += 1;
        }
        let limit = boundaries
            .get(next_boundary)
            .copied()
            .unwrap_or(t_end)
            .min(t_end);
        let mut last_in_segment = false;
        h = h.min(cfg.dt_max);
        if t + h >= limit {
            h = limit - t;
            last_in_segment = true;
        }
        if h < underflow {
            let s = BlochState::new(y[0], y[1], y[2]);
            return Err(Error::Stiffness {
                t: t.as_f64(),
                dt: h.as_f64(),
                x: s.x.as_f64(),
                y: s.y.as_f64(),
                z: s.z.as_f64(),
                delta: k1.delta.as_f64(),
            });
        }

        let mut k: [Y<T>; 7] = [[T::zero(); 5]; 7];
        k[0] = k1.dy;
        let mut stage_y = y;
        let mut k7 = None;
        for st in 1..7 {
            for (i, yi) in stage_y.iter_mut().enumerate() {
                let mut acc = T::zero();
                for j in 0..st {
                    acc += a[st][j] * k[j][i];
                }
                *yi = y[i] + h * acc;
            }
            let ts = if st == 6 && last_in_segment {
                limit
            } else {
                t + c[st] * h
            };
            let ev = eval_point(ts, &stage_y, w, p);
            k[st] = ev.dy;
            if st == 6 {
                k7 = Some(ev);
            }
        }
        let y_new = stage_y;

        let mut err = T::zero();
        for i in 0..5 {
            let mut ei = T::zero();
            for j in 0..7 {
                ei += e[j] * k[j][i];
            }
            ei *= h;
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (ei / sc) * (ei / sc);
        }
        let err = (err / T::lit(5.0)).sqrt();

        if !err.is_finite() || err > T::one() {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2))
            } else {
                T::lit(0.2)
            };
            h *= fac;
            continue;
        }

        t = if last_in_segment { limit } else { t + h };
        y = y_new;
        stats.accepted += 1;

        let norm = BlochState::new(y[0], y[1], y[2]).norm();
        stats.max_norm = stats.max_norm.max(norm.as_f64());
        let mut kn = k7.expect("seven stages evaluated");
        if norm > T::one() + T::lit(STATE_TOL) {
            for yi in y.iter_mut().take(3) {
                *yi /= norm;
            }
            stats.renormalizations += 1;
            kn = eval_point(t, &y, w, p);
        }
        k1 = kn;

        let sample = make_sample(t, &y, &k1, p);
        let rho = Mat2::from_pauli(
            T::half(),
            [y[0] * T::half(), y[1] * T::half(), y[2] * T::half()],
        );
        let dtr = dissipator_matrix(&rho, &k1.h, p.t_d, p.k_t).trace();
        stats.max_dissipator_trace = stats.max_dissipator_trace.max(dtr.norm().as_f64());
        stats.max_ligand_power = stats
            .max_ligand_power
            .max((sample.power.p3 + sample.power.p4).abs().as_f64());

        let fired = stop(&sample);
        let at_end = t >= t_end;
        stride_count += 1;
        let keep = fired
            || at_end
            || (cfg.record_stride > 0 && stride_count.is_multiple_of(cfg.record_stride));
        if keep {
            samples.push(sample);
        }
        if fired && !at_end {
            return Ok(Run {
                trajectory: Trajectory { samples, stats },
                stopped_early: true,
            });
        }

        let fac = if err == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2)))
                .min(T::lit(5.0))
                .max(T::lit(0.2))
        };
        h *= fac;
    }

    Ok(Run {
        trajectory: Trajectory { samples, stats },
        stopped_early: false,
    })
}

/// Outcome of [`relax_to_equilibrium`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relaxation<T> {
    pub state: BlochState<T>,
    pub elapsed: T,
    /// `‖ds/dt‖ < RELAX_RATE_TOL` was reached before `t_max`.
    pub converged: bool,
    pub stats: RunStats,
}

/// Integrates at constant bias until `‖ds/dt‖ < 1e-10 / Tγ` or `t_max`.
pub fn relax_to_equilibrium<T: Real>(
    s0: BlochState<T>,
    delta: T,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    t_max: T,
) -> Result<Relaxation<T>> {
    if p.is_isolated() {
        return Err(Error::Domain(
            "relaxation needs a finite dissipation time".into(),
        ));
    }
    let w = BiasWaveform::constant(t_max, delta)?;
    let tol = T::lit(RELAX_RATE_TOL);
    let cfg = IntegratorConfig {
        record_stride: 0,
        ..*cfg
    };
    let run = integrate_until(s0, &w, p, &cfg, |smp| {
        let h = HamiltonianParts::assemble(p, smp.delta, smp.state.z);
        rhs(&smp.state, &h, p).norm() < tol
    })?;
    let last = run.trajectory.last();
    let h = HamiltonianParts::assemble(p, last.delta, last.state.z);
    Ok(Relaxation {
        state: last.state,
        elapsed: last.t,
        converged: run.stopped_early || rhs(&last.state, &h, p).norm() < tol,
        stats: run.trajectory.stats,
    })
}

/// Ground-state Bloch vector of the linear part at bias `delta`, used as a
/// seed for isolated runs.
pub fn linear_ground_state<T: Real>(p: &ModelParams<T>, delta: T) -> BlochState<T> {
    HamiltonianParts::assemble(&p.with_lambda(T::zero()), delta, T::zero()).ground_direction()
}
