//! Krylov propagation with a Fock cutoff that follows the state.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::dense::sample_times;
use super::{krylov_step, observables, HamiltonianAction, KrylovSettings, ObservableRecord, QuantumState};
use crate::error::{Error, Result};
use crate::model::{ModelParams, DEFAULT_FOCK_CEILING};
use crate::parallel::{current_threads, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationSettings {
    /// Population threshold for growing and shrinking the cutoff.
    pub eps: f64,
    pub tau_check: f64,
    pub delta_n: usize,
    pub sample_dt: f64,
    pub krylov: KrylovSettings,
    pub fock_ceiling: usize,
    pub wall_clock_budget_s: Option<f64>,
    pub execution: Execution,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        PropagationSettings {
            eps: 1e-6,
            tau_check: 1.0,
            delta_n: 8,
            sample_dt: 0.1,
            krylov: KrylovSettings::default(),
            fock_ceiling: DEFAULT_FOCK_CEILING,
            wall_clock_budget_s: None,
            execution: Execution::default(),
        }
    }
}

impl PropagationSettings {
    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0)
            || !(self.tau_check > 0.0)
            || self.delta_n == 0
            || !(self.sample_dt > 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "propagation needs eps ∈ (0, 1) and positive tau_check, delta_n, sample_dt: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffEventKind {
    /// Padding before the first step.
    Admit,
    Grow,
    Shrink,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffEvent {
    pub kind: CutoffEventKind,
    pub time: f64,
    pub from: usize,
    pub to: usize,
    /// Norm² removed by a shrink (zero otherwise).
    pub discarded_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationMeta {
    pub method: String,
    pub settings: Option<PropagationSettings>,
    /// Threads available to the matrix-vector product.
    pub threads: usize,
    pub redone_intervals: usize,
    pub total_discarded_norm: f64,
    pub final_norm: f64,
    pub entropy_log_base: String,
    pub wall_time_s: f64,
}

impl PropagationMeta {
    pub(crate) fn dense(dim: usize) -> Self {
        PropagationMeta {
            method: format!("dense eigendecomposition (dim {dim})"),
            settings: None,
            threads: 1,
            redone_intervals: 0,
            total_discarded_norm: 0.0,
            final_norm: 1.0,
            entropy_log_base: "e".into(),
            wall_time_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumTrajectory {
    pub times: Vec<f64>,
    pub records: Vec<ObservableRecord>,
    pub n_max_history: Vec<usize>,
    pub events: Vec<CutoffEvent>,
    pub meta: PropagationMeta,
    pub final_state: QuantumState,
}

impl QuantumTrajectory {
    pub fn series(&self, f: impl Fn(&ObservableRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }
}

fn top_population(pop: &[f64], levels: usize) -> f64 {
    pop[pop.len().saturating_sub(levels)..].iter().sum()
}

fn cutoff_grows(psi: &QuantumState, eps: f64) -> bool {
    top_population(&psi.populations(), 2) > eps
}

/// Evolve `psi0` to `t_final` (relative to `psi0.time`).
///
/// Time is cut into intervals of `tau_check` with a checkpoint at each boundary. If at
/// any sample of an interval the two highest Fock levels hold more than `eps`, the
/// cutoff grows by `delta_n` and the interval is redone from its checkpoint. If the top
/// `delta_n + 1` levels stay below `eps` throughout, the cutoff shrinks by `delta_n`
/// and the discarded norm is logged; the state is not renormalised.
pub fn propagate_adaptive(
    psi0: &QuantumState,
    p: &ModelParams,
    t_final: f64,
    settings: &PropagationSettings,
) -> Result<QuantumTrajectory> {
    settings.validate()?;
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_final = {t_final} must be ≥ 0")));
    }
    if psi0.n_spins() != p.require_spins()? {
        return Err(Error::InvalidParameter(format!(
            "state has N = {} but parameters have N = {:?}",
            psi0.n_spins(),
            p.n_spins
        )));
    }
    let started = Instant::now();
    let t_origin = psi0.time;
    let action = |n_max: usize| {
        HamiltonianAction::new(psi0.n_spins(), n_max, p.g, p.delta, p.omega)
            .with_execution(settings.execution)
    };
    let grow_to = |psi: &QuantumState, time: f64| -> Result<usize> {
        let to = psi.n_max() + settings.delta_n;
        if to > settings.fock_ceiling {
            return Err(Error::FockCeiling {
                needed: to,
                ceiling: settings.fock_ceiling,
                time,
                checkpoint: Box::new(psi.clone()),
            });
        }
        Ok(to)
    };

    let mut events = Vec::new();
    let mut psi = psi0.clone();
    while cutoff_grows(&psi, settings.eps) {
        let to = grow_to(&psi, t_origin)?;
        events.push(CutoffEvent {
            kind: CutoffEventKind::Admit,
            time: t_origin,
            from: psi.n_max(),
            to,
            discarded_norm: 0.0,
        });
        psi = psi.resized(to).0;
    }

    let grid = sample_times(t_final, settings.sample_dt);
    let mut h = action(psi.n_max());
    let mut times = vec![t_origin];
    let mut records = vec![observables(&psi, &h)];
    let mut n_max_history = vec![psi.n_max()];
    let mut redone = 0;
    let mut discarded_total = 0.0;

    let mut t = 0.0;
    let mut next_sample = 1;
    while t < t_final {
        if let Some(budget) = settings.wall_clock_budget_s {
            if started.elapsed().as_secs_f64() > budget {
                return Err(Error::WallClockBudget {
                    budget_s: budget,
                    time: t_origin + t,
                });
            }
        }
        let t_end = (t + settings.tau_check).min(t_final);
        let checkpoint = psi.clone();
        let mut stops: Vec<f64> = grid[next_sample..]
            .iter()
            .copied()
            .take_while(|&s| s <= t_end + 1e-12)
            .collect();
        if stops.last().is_none_or(|&s| s < t_end - 1e-12) {
            stops.push(t_end);
        }

        let mut pending: Vec<(f64, ObservableRecord)> = Vec::with_capacity(stops.len());
        let mut overflow = false;
        let mut shrinkable = true;
        let mut now = t;
        for &stop in &stops {
            let coeffs = krylov_step(&h, psi.coeffs(), stop - now, &settings.krylov)?;
            psi = QuantumState::from_coeffs(psi.n_spins(), psi.n_max(), coeffs);
            psi.time = t_origin + stop;
            now = stop;
            let pop = psi.populations();
            if top_population(&pop, 2) > settings.eps {
                overflow = true;
                break;
            }
            if top_population(&pop, settings.delta_n + 1) >= settings.eps {
                shrinkable = false;
            }
            if next_sample + pending.len() < grid.len()
                && (grid[next_sample + pending.len()] - stop).abs() <= 1e-12
            {
                pending.push((t_origin + stop, observables(&psi, &h)));
            }
        }

        if overflow {
            let to = grow_to(&checkpoint, t_origin + t)?;
            events.push(CutoffEvent {
                kind: CutoffEventKind::Grow,
                time: t_origin + t,
                from: checkpoint.n_max(),
                to,
                discarded_norm: 0.0,
            });
            psi = checkpoint.resized(to).0;
            h = action(to);
            redone += 1;
            continue;
        }

        for (time, rec) in pending.drain(..) {
            times.push(time);
            records.push(rec);
            n_max_history.push(psi.n_max());
            next_sample += 1;
        }
        t = t_end;

        if shrinkable && psi.n_max() > settings.delta_n && t < t_final {
            let to = psi.n_max() - settings.delta_n;
            let (smaller, lost) = psi.resized(to);
            log::debug!("cutoff {} → {to} at t = {}, discarded {lost:e}", psi.n_max(), t_origin + t);
            events.push(CutoffEvent {
                kind: CutoffEventKind::Shrink,
                time: t_origin + t,
                from: psi.n_max(),
                to,
                discarded_norm: lost,
            });
            discarded_total += lost;
            psi = smaller;
            h = action(to);
        }
    }

    Ok(QuantumTrajectory {
        times,
        records,
        n_max_history,
        events,
        meta: PropagationMeta {
            method: format!("Lanczos m = {}", settings.krylov.m_krylov),
            settings: Some(*settings),
            threads: match settings.execution.effective() {
                Execution::Parallel => current_threads(),
                Execution::Sequential => 1,
            },
            redone_intervals: redone,
            total_discarded_norm: discarded_total,
            final_norm: psi.norm_sqr().sqrt(),
            entropy_log_base: "e".into(),
            wall_time_s: started.elapsed().as_secs_f64(),
        },
        final_state: psi,
    })
}
