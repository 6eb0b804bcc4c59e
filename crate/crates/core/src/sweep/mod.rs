//! (g̃, η) grid runner with streamed, resumable results.
//!
//! An output directory holds `plan.json` (canonical plan, hashed), `records.csv` (one
//! row per point, each row carrying its own digest) and `summary.json`.

mod boundary;
mod records;

pub use boundary::{boundary_extract, BoundaryCurve, BoundaryPoint};
pub use records::{read_records, Payload, PointRecord, Status, RECORD_COLUMNS};

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{fit_exponential_saturation, temporal_fluctuations, windowed_time_average};
use crate::classical::{
    classify_phase, integrate, lyapunov_exponent, Couplings, LyapunovSettings, DEFAULT_TOL,
    DEFAULT_TRAP_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::model::{
    build_initial_classical, build_initial_quantum_with_ceiling, from_dimensionless,
    DimensionlessView, InitialCondition, DEFAULT_FOCK_CEILING,
};
use crate::parallel::{self, Execution};
use crate::quantum::{propagate_adaptive, KrylovSettings, PropagationSettings};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        Axis { min, max, count, spacing: Spacing::Linear }
    }

    pub fn log(min: f64, max: f64, count: usize) -> Self {
        Axis { min, max, count, spacing: Spacing::Log }
    }

    pub fn single(value: f64) -> Self {
        Self::linear(value, value, 1)
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidParameter(format!("axis {name}: {why}")));
        if self.count == 0 {
            return bad("count must be ≥ 1");
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return bad("need finite min ≤ max");
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return bad("log spacing requires positive bounds");
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + f * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ClassicalPhase,
    LyapunovMap,
    QuantumMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSettings {
    pub t_final: f64,
    pub tol: f64,
    pub sample_dt: f64,
    /// Averaging window as fractions of `t_final`.
    pub window: (f64, f64),
    pub threshold: f64,
    pub keep_traces: bool,
}

impl Default for ClassicalSettings {
    fn default() -> Self {
        ClassicalSettings {
            t_final: 2000.0,
            tol: DEFAULT_TOL,
            sample_dt: 0.5,
            window: (0.5, 1.0),
            threshold: DEFAULT_TRAP_THRESHOLD,
            keep_traces: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumSettings {
    pub n_spins: u32,
    pub t_final: f64,
    pub eps: f64,
    pub tau_check: f64,
    pub delta_n: usize,
    pub sample_dt: f64,
    pub m_krylov: usize,
    pub krylov_tol: f64,
    pub fock_ceiling: usize,
    pub wall_clock_budget_s: Option<f64>,
    /// Averaging window start t₀ and length T.
    pub window_t0: f64,
    pub window_span: f64,
}

impl Default for QuantumSettings {
    fn default() -> Self {
        let k = KrylovSettings::default();
        QuantumSettings {
            n_spins: 40,
            t_final: 300.0,
            eps: 1e-6,
            tau_check: 1.0,
            delta_n: 8,
            sample_dt: 0.5,
            m_krylov: k.m_krylov,
            krylov_tol: k.tol,
            fock_ceiling: DEFAULT_FOCK_CEILING,
            wall_clock_budget_s: None,
            window_t0: 150.0,
            window_span: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub axis_g_tilde: Axis,
    pub axis_eta: Axis,
    pub task: Task,
    pub theta0: f64,
    pub beta0: f64,
    pub seed: u64,
    #[serde(default)]
    pub classical: ClassicalSettings,
    #[serde(default)]
    pub lyapunov: LyapunovSettings,
    #[serde(default)]
    pub quantum: QuantumSettings,
}

impl SweepPlan {
    pub fn new(axis_g_tilde: Axis, axis_eta: Axis, task: Task) -> Self {
        SweepPlan {
            axis_g_tilde,
            axis_eta,
            task,
            theta0: 0.0,
            beta0: 1.0,
            seed: 0,
            classical: ClassicalSettings::default(),
            lyapunov: LyapunovSettings::default(),
            quantum: QuantumSettings::default(),
        }
    }

    /// 41 × 31 grid over g̃ ∈ [0.5, 2.5], log-spaced η ∈ [0.1, 10].
    pub fn desk_scale(task: Task) -> Self {
        Self::new(Axis::linear(0.5, 2.5, 41), Axis::log(0.1, 10.0, 31), task)
    }

    pub fn validate(&self) -> Result<()> {
        self.axis_g_tilde.validate("g_tilde")?;
        self.axis_eta.validate("eta")?;
        if self.axis_g_tilde.min < 0.0 || self.axis_eta.min <= 0.0 {
            return Err(Error::InvalidParameter("need g̃ ≥ 0 and η > 0".into()));
        }
        InitialCondition::new(self.theta0, self.beta0)?;
        Ok(())
    }

    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn hash(&self) -> Result<String> {
        Ok(hex(&Sha256::digest(self.canonical_json()?.as_bytes())))
    }

    pub fn points(&self) -> Vec<GridPoint> {
        let gs = self.axis_g_tilde.values();
        let etas = self.axis_eta.values();
        etas.iter()
            .enumerate()
            .flat_map(|(i_eta, &eta)| {
                gs.iter().enumerate().map(move |(i_g, &g_tilde)| GridPoint {
                    i_g,
                    i_eta,
                    g_tilde,
                    eta,
                })
            })
            .collect()
    }

    /// Per-point seed from the plan seed and the grid indices.
    pub fn point_seed(&self, p: &GridPoint) -> u64 {
        let mut x = splitmix64(self.seed);
        x = splitmix64(x ^ p.i_eta as u64);
        splitmix64(x ^ (p.i_g as u64).rotate_left(32))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub i_g: usize,
    pub i_eta: usize,
    pub g_tilde: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<PointRecord>,
    pub plan_hash: String,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub task: Task,
    /// Points executed by this call (zero for a resume of a complete run).
    pub executed: usize,
}

impl SweepResult {
    pub fn get(&self, i_eta: usize, i_g: usize) -> Option<&PointRecord> {
        self.records.iter().find(|r| r.i_eta == i_eta && r.i_g == i_g)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    plan_hash: &'a str,
    tool_version: &'a str,
    wall_time_s: f64,
    workers: usize,
    points: usize,
    executed: usize,
    done: usize,
    failed: usize,
    excluded: usize,
}

pub const PLAN_FILE: &str = "plan.json";
pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Run every point of `plan`, replacing any previous results in `out_dir`.
pub fn run_sweep(plan: &SweepPlan, out_dir: &Path, workers: usize) -> Result<SweepResult> {
    plan.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let plan_path = out_dir.join(PLAN_FILE);
    fs::write(&plan_path, plan.canonical_json()?).map_err(|e| Error::io(&plan_path, e))?;
    let records_path = out_dir.join(RECORDS_FILE);
    records::write_all(&records_path, &[])?;
    execute(plan, out_dir, workers, Vec::new())
}

/// Complete a previous run in `out_dir`: missing, failed and corrupt points are
/// executed; everything else is kept.
pub fn resume_sweep(plan: &SweepPlan, out_dir: &Path, workers: usize) -> Result<SweepResult> {
    plan.validate()?;
    let plan_path = out_dir.join(PLAN_FILE);
    let stored_text = match fs::read_to_string(&plan_path) {
        Ok(s) => s,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::NoPriorRun(out_dir.to_path_buf()))
        }
        Err(e) => return Err(Error::io(&plan_path, e)),
    };
    let stored: SweepPlan = serde_json::from_str(&stored_text)?;
    let (stored_hash, requested) = (stored.hash()?, plan.hash()?);
    if stored_hash != requested {
        return Err(Error::PlanMismatch {
            stored: stored_hash,
            requested,
        });
    }
    let records_path = out_dir.join(RECORDS_FILE);
    let existing = if records_path.exists() {
        read_records(&records_path)?.valid
    } else {
        records::write_all(&records_path, &[])?;
        Vec::new()
    };
    execute(plan, out_dir, workers, existing)
}

fn execute(
    plan: &SweepPlan,
    out_dir: &Path,
    workers: usize,
    existing: Vec<PointRecord>,
) -> Result<SweepResult> {
    let started = Instant::now();
    let plan_hash = plan.hash()?;
    let points = plan.points();
    let mut kept: Vec<PointRecord> = Vec::with_capacity(points.len());
    for r in existing {
        let planned = points.iter().any(|p| p.i_g == r.i_g && p.i_eta == r.i_eta);
        if planned && r.status != Status::Failed {
            // Later rows for the same point win.
            kept.retain(|k| !(k.i_g == r.i_g && k.i_eta == r.i_eta));
            kept.push(r);
        }
    }
    let pending: Vec<GridPoint> = points
        .iter()
        .filter(|p| !kept.iter().any(|r| r.i_g == p.i_g && r.i_eta == p.i_eta))
        .copied()
        .collect();
    log::info!(
        "sweep {}: {} points, {} pending, {workers} workers",
        &plan_hash[..12],
        points.len(),
        pending.len()
    );

    let records_path = out_dir.join(RECORDS_FILE);
    let traces_dir = out_dir.join("traces");
    if plan.classical.keep_traces && plan.task == Task::ClassicalPhase {
        fs::create_dir_all(&traces_dir).map_err(|e| Error::io(&traces_dir, e))?;
    }
    let (tx, rx) = mpsc::channel::<PointRecord>();
    let writer = {
        let path = records_path.clone();
        std::thread::spawn(move || records::append_stream(&path, rx))
    };
    let fresh = parallel::with_workers(workers, || {
        parallel::map(&pending, Execution::Parallel, |p| {
            let rec = evaluate_point(plan, p, plan.classical.keep_traces.then_some(&traces_dir));
            // A dead writer surfaces below; keep computing so results are still returned.
            let _ = tx.send(rec.clone());
            rec
        })
    });
    drop(tx);
    writer.join().expect("record writer panicked")?;

    let executed = fresh.len();
    kept.extend(fresh);
    kept.sort_by_key(|r| (r.i_eta, r.i_g));
    records::write_all(&records_path, &kept)?;

    let wall_time_s = started.elapsed().as_secs_f64();
    let count = |s: Status| kept.iter().filter(|r| r.status == s).count();
    let summary = Summary {
        plan_hash: &plan_hash,
        tool_version: TOOL_VERSION,
        wall_time_s,
        workers,
        points: points.len(),
        executed,
        done: count(Status::Done),
        failed: count(Status::Failed),
        excluded: count(Status::Excluded),
    };
    let summary_path = out_dir.join(SUMMARY_FILE);
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)
        .map_err(|e| Error::io(&summary_path, e))?;

    Ok(SweepResult {
        records: kept,
        plan_hash,
        tool_version: TOOL_VERSION.into(),
        wall_time_s,
        task: plan.task,
        executed,
    })
}

/// Evaluate one grid point with the plan's engine. Never fails: errors become
/// `Failed` or `Excluded` records.
pub fn evaluate_point(plan: &SweepPlan, p: &GridPoint, traces: Option<&PathBuf>) -> PointRecord {
    let outcome = match plan.task {
        Task::ClassicalPhase => classical_point(plan, p, traces),
        Task::LyapunovMap => lyapunov_point(plan, p),
        Task::QuantumMap => quantum_point(plan, p),
    };
    let (status, payload, reason) = match outcome {
        Ok(payload) => (Status::Done, payload, None),
        Err(e @ (Error::FockCeiling { .. } | Error::WallClockBudget { .. })) => {
            (Status::Excluded, Payload::default(), Some(e.to_string()))
        }
        Err(e) => (Status::Failed, Payload::default(), Some(e.to_string())),
    };
    PointRecord {
        i_g: p.i_g,
        i_eta: p.i_eta,
        g_tilde: p.g_tilde,
        eta: p.eta,
        status,
        payload,
        reason,
    }
}

fn classical_point(plan: &SweepPlan, p: &GridPoint, traces: Option<&PathBuf>) -> Result<Payload> {
    let s = &plan.classical;
    let view = DimensionlessView::new(p.g_tilde, p.eta)?;
    let c = Couplings::from_dimensionless(&view);
    let x0 = build_initial_classical(&InitialCondition::new(plan.theta0, plan.beta0)?, None)?;
    let traj = integrate(&x0, &c, s.t_final, s.tol, s.sample_dt)?;
    let window = (s.window.0 * s.t_final, s.window.1 * s.t_final);
    let label = classify_phase(&traj, window, s.threshold)?;
    if let Some(dir) = traces {
        let path = dir.join(format!("trace_{:03}_{:03}.csv", p.i_eta, p.i_g));
        crate::io::write_trajectory_csv(&path, &traj)?;
    }
    Ok(Payload {
        sz_bar: Some(label.order_parameter_sz),
        x_bar: Some(label.order_parameter_x),
        label: Some(label.label),
        confidence: Some(label.confidence),
        ..Default::default()
    })
}

fn lyapunov_point(plan: &SweepPlan, p: &GridPoint) -> Result<Payload> {
    let view = DimensionlessView::new(p.g_tilde, p.eta)?;
    let c = Couplings::from_dimensionless(&view);
    let x0 = build_initial_classical(&InitialCondition::new(plan.theta0, plan.beta0)?, None)?;
    let r = lyapunov_exponent(&x0, &c, &plan.lyapunov, plan.point_seed(p))?;
    Ok(Payload {
        lambda: Some(r.lambda),
        ..Default::default()
    })
}

fn quantum_point(plan: &SweepPlan, p: &GridPoint) -> Result<Payload> {
    let q = &plan.quantum;
    let view = DimensionlessView::new(p.g_tilde, p.eta)?;
    let params = from_dimensionless(&view, 1.0)?.with_spins(q.n_spins)?;
    let ic = InitialCondition::new(plan.theta0, plan.beta0)?;
    let psi0 = build_initial_quantum_with_ceiling(&params, &ic, q.eps, q.fock_ceiling)
        .map_err(|e| match e {
            Error::CutoffCeiling { needed, ceiling } => Error::FockCeiling {
                needed,
                ceiling,
                time: 0.0,
                checkpoint: Box::new(crate::quantum::QuantumState::zeros(q.n_spins, 0)),
            },
            e => e,
        })?;
    let settings = PropagationSettings {
        eps: q.eps,
        tau_check: q.tau_check,
        delta_n: q.delta_n,
        sample_dt: q.sample_dt,
        krylov: KrylovSettings {
            m_krylov: q.m_krylov,
            tol: q.krylov_tol,
        },
        fock_ceiling: q.fock_ceiling,
        wall_clock_budget_s: q.wall_clock_budget_s,
        // Points already run concurrently.
        execution: Execution::Sequential,
    };
    let traj = propagate_adaptive(&psi0, &params, q.t_final, &settings)?;
    let svn = traj.series(|r| r.svn);
    let half_n = q.n_spins as f64 / 2.0;
    let sz: Vec<f64> = traj.series(|r| r.sz / half_n);
    let var = traj.series(|r| r.sz_var());
    let svn_bar = windowed_time_average(&traj.times, &svn, q.window_t0, q.window_span)?;
    let svn_fluct = temporal_fluctuations(&traj.times, &svn, q.window_t0, q.window_span).ok();
    let sz_bar = windowed_time_average(&traj.times, &sz, q.window_t0, q.window_span)?;
    let fit = fit_exponential_saturation(&traj.times, &var);
    Ok(Payload {
        svn_bar: Some(svn_bar),
        svn_fluct,
        gamma: fit.converged.then_some(fit.gamma_effective),
        sz_bar_quantum: Some(sz_bar),
        ..Default::default()
    })
}
