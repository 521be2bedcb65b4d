//! Parameterized switching, memory, steady-state and dissipation experiments
//! over parameter grids.
//!
//! Grid points are independent and run on a fixed-size worker pool; results
//! are collected in grid order, so output does not depend on the worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::{integrate, IntegratorConfig, RunStats, Trajectory};
use crate::energetics::{
    adiabaticity_beta, dissipation_report, energy_balance_residual, excess_energy_isolated,
    GroundReference,
};
use crate::error::{Error, Result};
use crate::output::{trajectory_table, Cell, Table, DISSIPATION_COLUMNS, STEADY_COLUMNS};
use crate::qmodel::{BlochState, ModelParams};
use crate::steady::{enumerate_steady_states, SolverOptions, SteadySolution};
use crate::waveform::{hysteresis_protocol, memory_protocol, BiasWaveform, MemoryRegion};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Hysteresis,
    Memory,
    SteadyCurve,
    ExcessIsolated,
    DissipationSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        Self::Hysteresis,
        Self::Memory,
        Self::SteadyCurve,
        Self::ExcessIsolated,
        Self::DissipationSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hysteresis => "hysteresis",
            Self::Memory => "memory",
            Self::SteadyCurve => "steady_curve",
            Self::ExcessIsolated => "excess_isolated",
            Self::DissipationSweep => "dissipation_sweep",
        }
    }

    /// Default number of output points along the bias or time axis.
    pub fn default_points(self) -> usize {
        match self {
            Self::SteadyCurve => 201,
            Self::Hysteresis => 501,
            Self::Memory => 2001,
            Self::ExcessIsolated | Self::DissipationSweep => 0,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Logarithmic grid `min·10^(k/per_decade)`, `k = 0..=n`, ending at `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub per_decade: usize,
}

impl LogGrid {
    pub fn values(&self) -> Vec<f64> {
        let decades = (self.max / self.min).log10();
        let n = (decades * self.per_decade as f64).round().max(1.0) as usize;
        let (a, b) = (self.min.log10(), self.max.log10());
        (0..=n)
            .map(|k| {
                if k == 0 {
                    self.min
                } else if k == n {
                    self.max
                } else {
                    10f64.powf(a + (b - a) * k as f64 / n as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub lambda: Vec<f64>,
    /// Switching times; ignored when `ts_grid` is set.
    pub t_s: Vec<f64>,
    pub ts_grid: Option<LogGrid>,
    pub t_d: Vec<f64>,
    pub k_t: Vec<f64>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_amp: f64,
    /// Equilibration hold; defaults to `10·T_d`.
    pub t_hold: Option<f64>,
    /// Hold at the write amplitude in the memory protocol; defaults to `10·T_d`.
    pub t_write: Option<f64>,
    /// Explicit bias points for `steady_curve`, replacing the uniform grid.
    pub deltas: Vec<f64>,
    pub n_points: Option<usize>,
    pub n_starts: usize,
    pub seed: u64,
    pub ground_reference: GroundReference,
    /// Integrator overrides; `None` keeps the per-run defaults.
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub dt_max: Option<f64>,
    /// Emit one trajectory CSV per run, keeping every n-th sample; 0 disables.
    pub trajectory_stride: usize,
    /// Worker threads; 0 lets the pool choose.
    pub workers: usize,
}

impl ExperimentSpec {
    /// Bath and sweep defaults: `T_s = 1000`, `T_d = 10`, `kT = 1`,
    /// `Δ ∈ [−25, 25]`, `λ ∈ {0, 5, 10}`.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            lambda: vec![0.0, 5.0, 10.0],
            t_s: vec![1000.0],
            ts_grid: None,
            t_d: vec![10.0],
            k_t: vec![1.0],
            delta_min: -25.0,
            delta_max: 25.0,
            delta_amp: 25.0,
            t_hold: None,
            t_write: None,
            deltas: Vec::new(),
            n_points: None,
            n_starts: 100,
            seed: 0,
            ground_reference: GroundReference::Realized,
            rel_tol: None,
            abs_tol: None,
            dt_max: None,
            trajectory_stride: 0,
            workers: 0,
        }
    }

    pub fn switching_times(&self) -> Vec<f64> {
        match &self.ts_grid {
            Some(g) => g.values(),
            None => self.t_s.clone(),
        }
    }

    pub fn points(&self) -> usize {
        self.n_points.unwrap_or(self.kind.default_points())
    }

    pub fn hold_for(&self, t_d: f64) -> f64 {
        self.t_hold.unwrap_or(10.0 * t_d)
    }

    pub fn write_hold_for(&self, t_d: f64) -> f64 {
        self.t_write.unwrap_or(10.0 * t_d)
    }

    pub fn integrator(&self, p: &ModelParams<f64>, t_s: f64) -> IntegratorConfig<f64> {
        let mut cfg = IntegratorConfig::for_run(p, t_s);
        if let Some(r) = self.rel_tol {
            cfg.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            cfg.abs_tol = a;
        }
        if let Some(dt) = self.dt_max {
            cfg.dt_max = dt;
        }
        cfg
    }

    fn solver(&self) -> SolverOptions<f64> {
        SolverOptions::default()
    }

    fn expect(&self, kind: ExperimentKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Domain(format!(
                "spec is for `{}`, not `{}`",
                self.kind, kind
            )));
        }
        Ok(())
    }

    /// Steady branch at `delta` with the largest (`left`) or smallest `z`,
    /// preferring attracting branches.
    pub fn prepare_state(
        &self,
        p: &ModelParams<f64>,
        delta: f64,
        left: bool,
    ) -> Result<BlochState<f64>> {
        let set = enumerate_steady_states(p, delta, self.n_starts, self.seed, &self.solver())?;
        let pick = |it: &mut dyn Iterator<Item = &SteadySolution<f64>>| {
            it.max_by(|a, b| {
                let (za, zb) = if left {
                    (a.state.z, b.state.z)
                } else {
                    (-a.state.z, -b.state.z)
                };
                za.partial_cmp(&zb).expect("finite z")
            })
            .map(|s| s.state)
        };
        pick(&mut set.solutions.iter().filter(|s| s.stable))
            .or_else(|| pick(&mut set.solutions.iter()))
            .ok_or_else(|| Error::Domain(format!("no steady state at delta = {delta}")))
    }

    /// Runs `f` over `items` on the configured pool, keeping input order.
    pub fn par_map<I, R, F>(&self, items: &[I], f: F) -> Result<Vec<R>>
    where
        I: Sync,
        R: Send,
        F: Fn(&I) -> Result<R> + Sync,
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Domain(format!("worker pool: {e}")))?;
        pool.install(|| items.par_iter().map(&f).collect())
    }
}

/// A named table destined for `<out_dir>/<name>`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub table: Table,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathPoint {
    pub lambda: f64,
    pub t_s: f64,
    pub t_d: f64,
    pub k_t: f64,
}

impl BathPoint {
    pub fn params(&self) -> Result<ModelParams<f64>> {
        ModelParams::open(self.lambda, self.t_d, self.k_t)
    }

    fn label(&self, what: &str) -> String {
        format!(
            "{what} run (lambda = {}, t_s = {}, t_d = {}, k_t = {})",
            self.lambda, self.t_s, self.t_d, self.k_t
        )
    }
}

/// Cartesian product in `λ, T_s, T_d, kT` order.
pub fn grid(spec: &ExperimentSpec) -> Vec<BathPoint> {
    let mut out = Vec::new();
    for &lambda in &spec.lambda {
        for &t_s in &spec.switching_times() {
            for &t_d in &spec.t_d {
                for &k_t in &spec.k_t {
                    out.push(BathPoint {
                        lambda,
                        t_s,
                        t_d,
                        k_t,
                    });
                }
            }
        }
    }
    out
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn bath_cells(b: &BathPoint) -> Vec<Cell> {
    vec![b.lambda.into(), b.t_s.into(), b.t_d.into(), b.k_t.into()]
}

fn trajectory_files(kind: &str, stride: usize, trajs: &[&Trajectory<f64>]) -> Vec<OutputFile> {
    if stride == 0 {
        return Vec::new();
    }
    trajs
        .iter()
        .enumerate()
        .map(|(i, t)| OutputFile {
            name: format!("{kind}_trajectory_{i:03}.csv"),
            table: trajectory_table(t, stride),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisRun {
    pub point: BathPoint,
    /// `(Δ, P_up, P_down)` on a uniform bias grid.
    pub curve: Vec<(f64, f64, f64)>,
    pub p_up_zero: f64,
    pub p_down_zero: f64,
    /// `|P_up(0) − P_down(0)|`
    pub width: f64,
    /// `max |P_up(Δ) − P_down(Δ)|` over the grid.
    pub max_gap: f64,
    pub trajectory: Trajectory<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisResult {
    pub runs: Vec<HysteresisRun>,
}

impl HysteresisResult {
    pub fn curve_table(&self) -> Table {
        let mut t = Table::new(&[
            "lambda",
            "t_s",
            "t_d",
            "k_t",
            "direction",
            "t",
            "delta",
            "p",
        ]);
        for run in &self.runs {
            let n = run.curve.len();
            let hold = run.trajectory.last().t - 2.0 * run.point.t_s;
            for &(d, p_up, _) in &run.curve {
                let mut row = bath_cells(&run.point);
                let t_up = sweep_time(d, &run.curve, run.point.t_s);
                row.extend(["up".into(), t_up.into(), d.into(), p_up.into()]);
                t.push(row);
            }
            for k in (0..n).rev() {
                let (d, _, p_down) = run.curve[k];
                let mut row = bath_cells(&run.point);
                let t_down = run.point.t_s
                    + hold
                    + (run.point.t_s - sweep_time(d, &run.curve, run.point.t_s));
                row.extend(["down".into(), t_down.into(), d.into(), p_down.into()]);
                t.push(row);
            }
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&[
            "lambda",
            "t_s",
            "t_d",
            "k_t",
            "p_up_zero",
            "p_down_zero",
            "width",
            "max_gap",
        ]);
        for run in &self.runs {
            let mut row = bath_cells(&run.point);
            row.extend([
                run.p_up_zero.into(),
                run.p_down_zero.into(),
                run.width.into(),
                run.max_gap.into(),
            ]);
            t.push(row);
        }
        t
    }

    pub fn files(&self, trajectory_stride: usize) -> Vec<OutputFile> {
        let mut files = vec![
            OutputFile {
                name: "hysteresis.csv".into(),
                table: self.curve_table(),
            },
            OutputFile {
                name: "hysteresis_summary.csv".into(),
                table: self.summary_table(),
            },
        ];
        let trajs: Vec<_> = self.runs.iter().map(|r| &r.trajectory).collect();
        files.extend(trajectory_files("hysteresis", trajectory_stride, &trajs));
        files
    }
}

fn sweep_time(delta: f64, curve: &[(f64, f64, f64)], t_s: f64) -> f64 {
    let (a, b) = (curve[0].0, curve[curve.len() - 1].0);
    (delta - a) / (b - a) * t_s
}

/// Up-sweep from the left-localized branch at `Δ_min`, hold at `Δ_max`,
/// down-sweep back.
pub fn run_hysteresis_point(spec: &ExperimentSpec, b: &BathPoint) -> Result<HysteresisRun> {
    let p = b.params()?;
    let (dmin, dmax, ts) = (spec.delta_min, spec.delta_max, b.t_s);
    let hold = spec.hold_for(b.t_d);
    let w = hysteresis_protocol(dmin, dmax, ts, hold)?;
    let s0 = spec.prepare_state(&p, dmin, true)?;
    let traj = integrate(s0, &w, &p, &spec.integrator(&p, ts).with_stride(1))?;
    let t_down0 = ts + hold;
    let curve: Vec<(f64, f64, f64)> = linspace(dmin, dmax, spec.points())
        .into_iter()
        .map(|d| {
            let f = (d - dmin) / (dmax - dmin);
            (
                d,
                traj.polarization_at(f * ts),
                traj.polarization_at(t_down0 + (1.0 - f) * ts),
            )
        })
        .collect();
    let f0 = -dmin / (dmax - dmin);
    let p_up_zero = traj.polarization_at(f0 * ts);
    let p_down_zero = traj.polarization_at(t_down0 + (1.0 - f0) * ts);
    let max_gap = curve.iter().map(|c| (c.1 - c.2).abs()).fold(0.0, f64::max);
    Ok(HysteresisRun {
        point: *b,
        curve,
        p_up_zero,
        p_down_zero,
        width: (p_up_zero - p_down_zero).abs(),
        max_gap,
        trajectory: traj,
    })
}

pub fn run_hysteresis(spec: &ExperimentSpec) -> Result<HysteresisResult> {
    spec.expect(ExperimentKind::Hysteresis)?;
    let runs = spec.par_map(&grid(spec), |b| {
        run_hysteresis_point(spec, b).map_err(|e| e.context(b.label("hysteresis")))
    })?;
    Ok(HysteresisResult { runs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSummary {
    pub region: MemoryRegion,
    pub t_start: f64,
    pub t_end: f64,
    pub p_end: f64,
    /// Extremes of `P` over every accepted step in the region.
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRun {
    pub point: BathPoint,
    pub regions: [RegionSummary; 4],
    /// `(region, t, Δ, P)` on a uniform time grid.
    pub trace: Vec<(MemoryRegion, f64, f64, f64)>,
    pub trajectory: Trajectory<f64>,
}

impl MemoryRun {
    pub fn region(&self, r: MemoryRegion) -> &RegionSummary {
        &self.regions[r as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryResult {
    pub runs: Vec<MemoryRun>,
}

impl MemoryResult {
    pub fn trace_table(&self) -> Table {
        let mut t = Table::new(&["lambda", "t_s", "t_d", "k_t", "region", "t", "delta", "p"]);
        for run in &self.runs {
            for &(r, time, d, p) in &run.trace {
                let mut row = bath_cells(&run.point);
                row.extend([r.label().into(), time.into(), d.into(), p.into()]);
                t.push(row);
            }
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&[
            "lambda", "t_s", "t_d", "k_t", "region", "t_start", "t_end", "p_end", "p_min", "p_max",
        ]);
        for run in &self.runs {
            for s in &run.regions {
                let mut row = bath_cells(&run.point);
                row.extend([
                    s.region.label().into(),
                    s.t_start.into(),
                    s.t_end.into(),
                    s.p_end.into(),
                    s.p_min.into(),
                    s.p_max.into(),
                ]);
                t.push(row);
            }
        }
        t
    }

    pub fn files(&self, trajectory_stride: usize) -> Vec<OutputFile> {
        let mut files = vec![
            OutputFile {
                name: "memory.csv".into(),
                table: self.trace_table(),
            },
            OutputFile {
                name: "memory_summary.csv".into(),
                table: self.summary_table(),
            },
        ];
        let trajs: Vec<_> = self.runs.iter().map(|r| &r.trajectory).collect();
        files.extend(trajectory_files("memory", trajectory_stride, &trajs));
        files
    }
}

/// Write '1', hold, write '0', hold, starting from the left-localized
/// equilibrium at zero bias. Ramps take `T_s/2`, the sweep rate of the
/// hysteresis protocol.
pub fn run_memory_point(spec: &ExperimentSpec, b: &BathPoint) -> Result<MemoryRun> {
    let p = b.params()?;
    let proto = memory_protocol(
        spec.delta_amp,
        b.t_s / 2.0,
        spec.write_hold_for(b.t_d),
        spec.hold_for(b.t_d),
    )?;
    let s0 = spec.prepare_state(&p, 0.0, true)?;
    let traj = integrate(
        s0,
        &proto.waveform,
        &p,
        &spec.integrator(&p, b.t_s).with_stride(1),
    )?;

    let regions = std::array::from_fn(|k| {
        let (t0, t1) = proto.regions[k];
        let zs = traj
            .samples
            .iter()
            .filter(|s| s.t >= t0 && s.t <= t1)
            .map(|s| s.state.z);
        let (lo, hi) = zs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
            (lo.min(z), hi.max(z))
        });
        RegionSummary {
            region: MemoryRegion::ALL[k],
            t_start: t0,
            t_end: t1,
            p_end: traj.polarization_at(t1),
            p_min: lo,
            p_max: hi,
        }
    });
    let total = proto.waveform.total_duration();
    let trace = linspace(0.0, total, spec.points())
        .into_iter()
        .map(|t| {
            let (d, _) = proto.waveform.eval_unchecked(t);
            (proto.region_at(t), t, d, traj.polarization_at(t))
        })
        .collect();
    Ok(MemoryRun {
        point: *b,
        regions,
        trace,
        trajectory: traj,
    })
}

pub fn run_memory(spec: &ExperimentSpec) -> Result<MemoryResult> {
    spec.expect(ExperimentKind::Memory)?;
    let runs = spec.par_map(&grid(spec), |b| {
        run_memory_point(spec, b).map_err(|e| e.context(b.label("memory")))
    })?;
    Ok(MemoryResult { runs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyCurve {
    pub lambda: f64,
    pub k_t: f64,
    /// `(Δ, solutions sorted by z descending)`
    pub points: Vec<(f64, Vec<SteadySolution<f64>>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyCurveResult {
    pub curves: Vec<SteadyCurve>,
}

impl SteadyCurveResult {
    /// `lambda, k_t` followed by the steady-curve schema.
    pub fn table(&self) -> Table {
        let mut cols = vec!["lambda", "k_t"];
        cols.extend(STEADY_COLUMNS);
        let mut t = Table::new(&cols);
        for c in &self.curves {
            for (d, sols) in &c.points {
                for (i, s) in sols.iter().enumerate() {
                    t.push(vec![
                        c.lambda.into(),
                        c.k_t.into(),
                        (*d).into(),
                        i.into(),
                        s.state.x.into(),
                        s.state.z.into(),
                        s.energy.into(),
                        s.stable.into(),
                    ]);
                }
            }
        }
        t
    }

    pub fn files(&self) -> Vec<OutputFile> {
        vec![OutputFile {
            name: "steady_curve.csv".into(),
            table: self.table(),
        }]
    }
}

/// Bias points: the explicit list, or a uniform grid over `±3(λ + kT)`.
pub fn steady_biases(spec: &ExperimentSpec, lambda: f64, k_t: f64) -> Vec<f64> {
    if !spec.deltas.is_empty() {
        return spec.deltas.clone();
    }
    let span = 3.0 * (lambda + k_t);
    linspace(-span, span, spec.points())
}

pub fn run_steady_curve(spec: &ExperimentSpec) -> Result<SteadyCurveResult> {
    spec.expect(ExperimentKind::SteadyCurve)?;
    let t_d = spec.t_d[0];
    let mut items = Vec::new();
    for &lambda in &spec.lambda {
        for &k_t in &spec.k_t {
            for d in steady_biases(spec, lambda, k_t) {
                items.push((lambda, k_t, d));
            }
        }
    }
    let sets = spec.par_map(&items, |&(lambda, k_t, d)| {
        let p = ModelParams::open(lambda, t_d, k_t)?;
        enumerate_steady_states(&p, d, spec.n_starts, spec.seed, &spec.solver()).map_err(|e| {
            e.context(format!(
                "steady states (lambda = {lambda}, k_t = {k_t}, delta = {d})"
            ))
        })
    })?;
    let mut curves: Vec<SteadyCurve> = Vec::new();
    for (&(lambda, k_t, d), set) in items.iter().zip(sets) {
        match curves.last_mut() {
            Some(c) if c.lambda == lambda && c.k_t == k_t => c.points.push((d, set.solutions)),
            _ => curves.push(SteadyCurve {
                lambda,
                k_t,
                points: vec![(d, set.solutions)],
            }),
        }
    }
    Ok(SteadyCurveResult { curves })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessRow {
    pub lambda: f64,
    pub t_s: f64,
    pub beta: f64,
    pub e_excess: f64,
    /// Energy-balance residual of the run.
    pub balance: f64,
    pub stats: RunStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessResult {
    pub rows: Vec<ExcessRow>,
}

impl ExcessResult {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["lambda", "t_s", "beta", "e_excess"]);
        for r in &self.rows {
            t.push(vec![
                r.lambda.into(),
                r.t_s.into(),
                r.beta.into(),
                r.e_excess.into(),
            ]);
        }
        t
    }

    pub fn files(&self) -> Vec<OutputFile> {
        vec![OutputFile {
            name: "excess_isolated.csv".into(),
            table: self.table(),
        }]
    }
}

/// Isolated sweep `Δ_min → Δ_max` from the left-localized ground branch.
pub fn run_excess_point(spec: &ExperimentSpec, lambda: f64, t_s: f64) -> Result<ExcessRow> {
    let p = ModelParams::isolated(lambda)?;
    let s0 = spec.prepare_state(&p, spec.delta_min, true)?;
    let w = BiasWaveform::ramp(t_s, spec.delta_min, spec.delta_max)?;
    let traj = integrate(s0, &w, &p, &spec.integrator(&p, t_s).with_stride(0))?;
    Ok(ExcessRow {
        lambda,
        t_s,
        beta: adiabaticity_beta(&p, t_s, spec.delta_min, spec.delta_max)?,
        e_excess: excess_energy_isolated(&traj, &p, spec.ground_reference)?,
        balance: energy_balance_residual(&traj),
        stats: traj.stats,
    })
}

pub fn run_excess_isolated(spec: &ExperimentSpec) -> Result<ExcessResult> {
    spec.expect(ExperimentKind::ExcessIsolated)?;
    let mut items = Vec::new();
    for &lambda in &spec.lambda {
        for t_s in spec.switching_times() {
            items.push((lambda, t_s));
        }
    }
    let rows = spec.par_map(&items, |&(lambda, t_s)| {
        run_excess_point(spec, lambda, t_s)
            .map_err(|e| e.context(format!("isolated run (lambda = {lambda}, t_s = {t_s})")))
    })?;
    Ok(ExcessResult { rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationRow {
    pub point: BathPoint,
    pub beta: f64,
    pub e_switch: f64,
    pub e_excess: f64,
    pub e_diss: f64,
    /// Energy-balance residual of the run.
    pub balance: f64,
    pub stats: RunStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationResult {
    pub rows: Vec<DissipationRow>,
}

impl DissipationResult {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&DISSIPATION_COLUMNS);
        for r in &self.rows {
            let mut row = bath_cells(&r.point);
            row.extend([
                r.beta.into(),
                r.e_switch.into(),
                r.e_excess.into(),
                r.e_diss.into(),
            ]);
            t.push(row);
        }
        t
    }

    pub fn files(&self) -> Vec<OutputFile> {
        vec![OutputFile {
            name: "dissipation.csv".into(),
            table: self.table(),
        }]
    }

    /// `(T_s, E_diss)` for one `(λ, T_d, kT)` slice, in grid order.
    pub fn series(&self, lambda: f64, t_d: f64, k_t: f64) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.point.lambda == lambda && r.point.t_d == t_d && r.point.k_t == k_t)
            .map(|r| (r.point.t_s, r.e_diss))
            .collect()
    }
}

/// One switching ramp `Δ_min → Δ_max` from the left-localized steady branch.
pub fn run_dissipation_point(spec: &ExperimentSpec, b: &BathPoint) -> Result<DissipationRow> {
    let p = b.params()?;
    let s0 = spec.prepare_state(&p, spec.delta_min, true)?;
    let w = BiasWaveform::ramp(b.t_s, spec.delta_min, spec.delta_max)?;
    let traj = integrate(s0, &w, &p, &spec.integrator(&p, b.t_s).with_stride(0))?;
    let r = dissipation_report(&traj, &p, spec.delta_max)?;
    Ok(DissipationRow {
        point: *b,
        beta: r.beta,
        e_switch: r.e_switch,
        e_excess: r.e_excess,
        e_diss: r.e_diss,
        balance: energy_balance_residual(&traj),
        stats: traj.stats,
    })
}

pub fn run_dissipation_sweep(spec: &ExperimentSpec) -> Result<DissipationResult> {
    spec.expect(ExperimentKind::DissipationSweep)?;
    let rows = spec.par_map(&grid(spec), |b| {
        run_dissipation_point(spec, b).map_err(|e| e.context(b.label("switching")))
    })?;
    Ok(DissipationResult { rows })
}

/// Runs the experiment named by `spec.kind` and returns its output tables.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<OutputFile>> {
    Ok(match spec.kind {
        ExperimentKind::Hysteresis => run_hysteresis(spec)?.files(spec.trajectory_stride),
        ExperimentKind::Memory => run_memory(spec)?.files(spec.trajectory_stride),
        ExperimentKind::SteadyCurve => run_steady_curve(spec)?.files(),
        ExperimentKind::ExcessIsolated => run_excess_isolated(spec)?.files(),
        ExperimentKind::DissipationSweep => run_dissipation_sweep(spec)?.files(),
    })
}
