use dicke_core::analysis::{fit_exponential_saturation, fit_translated_logistic, feasibility_ratios_hz};
use dicke_core::classical::{self, classify_phase, default_window, integrate, Couplings};
use dicke_core::io;
use dicke_core::model::{build_initial_classical, build_initial_quantum_with_ceiling, ModelConfig};
use dicke_core::parallel::{current_threads, with_workers};
use dicke_core::potential::{
    critical_coupling_boson, critical_coupling_spin, numeric_critical_coupling, potential_curve, Regime,
};
use dicke_core::quantum::{propagate_adaptive, KrylovSettings, PropagationSettings};
use dicke_core::sweep::{boundary_extract, resume_sweep, run_sweep, Axis, Spacing, SweepPlan, SweepResult, Task};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::config::{load_config, merge, to_value, write_metadata, CliError, CliResult};

pub struct Context {
    pub out: std::path::PathBuf,
    pub workers: usize,
    pub seed: u64,
    file_settings: Option<Value>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let name = cli.command.name();
    let mut file_seed = None;
    let file_settings = match &cli.config {
        None => None,
        Some(path) => {
            let file = load_config(path)?;
            if let Some(cmd) = &file.command {
                if cmd != name {
                    return Err(CliError::Usage(format!(
                        "{} records a {cmd} run, not {name}",
                        path.display()
                    )));
                }
            }
            file_seed = file.seed;
            Some(file.settings)
        }
    };
    let ctx = Context {
        out: cli.out.clone(),
        workers: cli.workers.unwrap_or_else(current_threads).max(1),
        seed: cli.seed.or(file_seed).unwrap_or(0),
        file_settings,
    };
    std::fs::create_dir_all(&ctx.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", ctx.out.display())))?;

    match cli.command {
        Command::Trace(a) => trace(&ctx, ctx.resolve(name, &a)?),
        Command::QuantumTrace(a) => quantum_trace(&ctx, ctx.resolve(name, &a)?),
        Command::PhaseDiagram(a) => sweep(&ctx, Task::ClassicalPhase, ctx.resolve_sweep(name, &a)?),
        Command::LyapunovMap(a) => sweep(&ctx, Task::LyapunovMap, ctx.resolve_sweep(name, &a)?),
        Command::QuantumMap(a) => sweep(&ctx, Task::QuantumMap, ctx.resolve_sweep(name, &a)?),
        Command::Potential(a) => potential(&ctx, ctx.resolve(name, &a)?),
        Command::Critical(a) => critical(&ctx, ctx.resolve(name, &a)?),
        Command::Fit(a) => fit(&ctx, ctx.resolve(name, &a)?),
        Command::Feasibility(a) => feasibility(&ctx, ctx.resolve(name, &a)?),
    }
}

/// Settings after defaults are filled, paired with the command name for metadata.
struct Resolved<T> {
    command: &'static str,
    args: T,
}

impl Context {
    fn resolve<T: Serialize + DeserializeOwned + Defaults>(&self, command: &'static str, cli: &T) -> CliResult<Resolved<T>> {
        let mut args = merge(cli, self.file_settings.as_ref())?;
        args.fill_defaults();
        Ok(Resolved { command, args })
    }

    fn resolve_sweep(&self, command: &'static str, cli: &SweepArgs) -> CliResult<Resolved<SweepArgs>> {
        let resume = cli.resume;
        let mut r = self.resolve(command, cli)?;
        r.args.resume = resume;
        Ok(r)
    }

    fn metadata<T: Serialize>(&self, r: &Resolved<T>) -> CliResult<()> {
        write_metadata(&self.out, r.command, self.seed, self.workers, to_value(&r.args)?)
    }

    fn path(&self, file: &str) -> std::path::PathBuf {
        self.out.join(file)
    }
}

trait Defaults {
    fn fill_defaults(&mut self) {}
}

impl Defaults for TraceArgs {
    fn fill_defaults(&mut self) {
        self.t_final.get_or_insert(2000.0);
        self.tol.get_or_insert(classical::DEFAULT_TOL);
        self.sample_dt.get_or_insert(0.5);
        self.threshold.get_or_insert(classical::DEFAULT_TRAP_THRESHOLD);
        self.model.theta0.get_or_insert(0.0);
        if self.model.alpha.is_none() {
            self.model.beta0.get_or_insert(1.0);
        }
    }
}

impl Defaults for QuantumTraceArgs {
    fn fill_defaults(&mut self) {
        let p = PropagationSettings::default();
        self.n_spins.get_or_insert(40);
        self.t_final.get_or_insert(100.0);
        self.eps.get_or_insert(p.eps);
        self.tau_check.get_or_insert(p.tau_check);
        self.delta_n.get_or_insert(p.delta_n);
        self.sample_dt.get_or_insert(p.sample_dt);
        self.m_krylov.get_or_insert(p.krylov.m_krylov);
        self.krylov_tol.get_or_insert(p.krylov.tol);
        self.fock_ceiling.get_or_insert(p.fock_ceiling);
        self.model.theta0.get_or_insert(0.0);
        if self.model.alpha.is_none() {
            self.model.beta0.get_or_insert(1.0);
        }
    }
}

impl Defaults for SweepArgs {}

impl Defaults for PotentialArgs {
    fn fill_defaults(&mut self) {
        self.regime.get_or_insert(RegimeArg::Spin);
        self.g_tilde.get_or_insert(1.0);
        self.theta0.get_or_insert(0.0);
        self.beta0.get_or_insert(1.0);
        self.scale.get_or_insert(1.0);
        self.points.get_or_insert(401);
    }
}

impl Defaults for CriticalArgs {
    fn fill_defaults(&mut self) {
        self.regime.get_or_insert(RegimeArg::Spin);
        self.theta0.get_or_insert(0.0);
        self.beta0.get_or_insert(1.0);
    }
}

impl Defaults for FitArgs {
    fn fill_defaults(&mut self) {
        self.column.get_or_insert_with(|| "sz_var".into());
        self.time_column.get_or_insert_with(|| "t".into());
        self.kind.get_or_insert(FitKindArg::Both);
    }
}

impl Defaults for FeasibilityArgs {}

fn model_config(m: &ModelArgs, n_spins: Option<u32>) -> ModelConfig {
    ModelConfig {
        g: m.g,
        delta: m.delta,
        omega: m.omega,
        n_spins,
        g_tilde: m.g_tilde,
        eta: m.eta,
        theta0: m.theta0,
        beta0: m.beta0,
        alpha: m.alpha,
    }
}

fn regime(r: RegimeArg) -> Regime {
    match r {
        RegimeArg::Spin => Regime::SpinDominated,
        RegimeArg::Boson => Regime::BosonDominated,
    }
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn trace(ctx: &Context, r: Resolved<TraceArgs>) -> CliResult<()> {
    let a = &r.args;
    let model = model_config(&a.model, None).resolve()?;
    let x0 = build_initial_classical(&model.initial, Some(&model.params))?;
    let c = Couplings::from_params(&model.params);
    let traj = integrate(&x0, &c, a.t_final.unwrap(), a.tol.unwrap(), a.sample_dt.unwrap())?;
    let window = default_window(&traj);
    let label = classify_phase(&traj, window, a.threshold.unwrap())?;
    ctx.metadata(&r)?;
    io::write_trajectory_csv(&ctx.path("trajectory.csv"), &traj)?;
    io::write_json(
        &ctx.path("trace.json"),
        &json!({
            "view": model.view,
            "params": model.params,
            "window": window,
            "phase": label,
            "integrator": traj.integrator_meta,
        }),
    )?;
    println!(
        "{:?}: S̄_z = {:.6}, X̄ = {:.6}",
        label.label, label.order_parameter_sz, label.order_parameter_x
    );
    Ok(())
}

fn quantum_trace(ctx: &Context, r: Resolved<QuantumTraceArgs>) -> CliResult<()> {
    let a = &r.args;
    let model = model_config(&a.model, a.n_spins).resolve()?;
    let settings = PropagationSettings {
        eps: a.eps.unwrap(),
        tau_check: a.tau_check.unwrap(),
        delta_n: a.delta_n.unwrap(),
        sample_dt: a.sample_dt.unwrap(),
        krylov: KrylovSettings {
            m_krylov: a.m_krylov.unwrap(),
            tol: a.krylov_tol.unwrap(),
        },
        fock_ceiling: a.fock_ceiling.unwrap(),
        wall_clock_budget_s: a.wall_clock_budget,
        ..Default::default()
    };
    let psi0 = build_initial_quantum_with_ceiling(&model.params, &model.initial, settings.eps, settings.fock_ceiling)?;
    ctx.metadata(&r)?;
    let traj = with_workers(ctx.workers, || propagate_adaptive(&psi0, &model.params, a.t_final.unwrap(), &settings))?;
    io::write_quantum_csv(&ctx.path("quantum.csv"), &traj)?;
    io::write_json(
        &ctx.path("quantum.json"),
        &json!({
            "view": model.view,
            "params": model.params,
            "events": traj.events,
            "meta": traj.meta,
        }),
    )?;
    println!(
        "{} samples, final cutoff {}, final norm {:.3e}",
        traj.times.len(),
        traj.final_state.n_max(),
        traj.meta.final_norm
    );
    Ok(())
}

fn axis(min: Option<f64>, max: Option<f64>, count: Option<usize>, spacing: Option<SpacingArg>, base: &Axis) -> Axis {
    Axis {
        min: min.unwrap_or(base.min),
        max: max.unwrap_or(base.max),
        count: count.unwrap_or(base.count),
        spacing: match spacing {
            None => base.spacing,
            Some(SpacingArg::Linear) => Spacing::Linear,
            Some(SpacingArg::Log) => Spacing::Log,
        },
    }
}

fn sweep_plan(task: Task, a: &SweepArgs, seed: u64) -> SweepPlan {
    let mut plan = SweepPlan::desk_scale(task);
    plan.axis_g_tilde = axis(a.g_min, a.g_max, a.g_count, None, &plan.axis_g_tilde);
    plan.axis_eta = axis(a.eta_min, a.eta_max, a.eta_count, a.eta_spacing, &plan.axis_eta);
    plan.theta0 = a.theta0.unwrap_or(plan.theta0);
    plan.beta0 = a.beta0.unwrap_or(plan.beta0);
    plan.seed = seed;
    match task {
        Task::ClassicalPhase => {
            let c = &mut plan.classical;
            c.t_final = a.t_final.unwrap_or(c.t_final);
            c.threshold = a.threshold.unwrap_or(c.threshold);
            c.keep_traces = a.keep_traces.unwrap_or(c.keep_traces);
        }
        Task::LyapunovMap => {
            let l = &mut plan.lyapunov;
            l.t_total = a.t_final.unwrap_or(l.t_total);
            l.t_transient = a.t_transient.unwrap_or(l.t_transient);
            l.renorm_dt = a.renorm_dt.unwrap_or(l.renorm_dt);
        }
        Task::QuantumMap => {
            let q = &mut plan.quantum;
            q.n_spins = a.n_spins.unwrap_or(q.n_spins);
            if let Some(t) = a.t_final {
                q.t_final = t;
                q.window_t0 = t / 2.0;
                q.window_span = t / 2.0;
            }
            q.eps = a.eps.unwrap_or(q.eps);
            q.fock_ceiling = a.fock_ceiling.unwrap_or(q.fock_ceiling);
            q.wall_clock_budget_s = a.wall_clock_budget.or(q.wall_clock_budget_s);
        }
    }
    plan
}

fn sweep(ctx: &Context, task: Task, r: Resolved<SweepArgs>) -> CliResult<()> {
    let a = &r.args;
    let plan = sweep_plan(task, a, ctx.seed);
    plan.validate()?;
    let result: SweepResult = if a.resume {
        resume_sweep(&plan, &ctx.out, ctx.workers)?
    } else {
        run_sweep(&plan, &ctx.out, ctx.workers)?
    };
    ctx.metadata(&r)?;
    let count = |s| result.records.iter().filter(|p| p.status == s).count();
    use dicke_core::sweep::Status;
    println!(
        "{} points ({} run now): {} done, {} failed, {} excluded in {:.1} s",
        result.records.len(),
        result.executed,
        count(Status::Done),
        count(Status::Failed),
        count(Status::Excluded),
        result.wall_time_s
    );
    if task == Task::ClassicalPhase {
        let curve = boundary_extract(&result, plan.classical.threshold)?;
        io::write_json(&ctx.path("boundary.json"), &curve)?;
        for p in &curve.points {
            println!("η = {:.4}: g̃_c = {:.4}", p.eta, p.g_tilde_crit);
        }
    }
    Ok(())
}

fn potential(ctx: &Context, r: Resolved<PotentialArgs>) -> CliResult<()> {
    let a = &r.args;
    let ic = dicke_core::model::InitialCondition::new(a.theta0.unwrap(), a.beta0.unwrap())?;
    let curve = potential_curve(regime(a.regime.unwrap()), a.g_tilde.unwrap(), &ic, a.scale.unwrap(), a.points.unwrap())?;
    ctx.metadata(&r)?;
    io::write_potential_csv(&ctx.path("potential.csv"), &curve)?;
    println!("{} points, ξ₀ = {}", curve.values.len(), curve.xi_initial);
    Ok(())
}

fn critical(ctx: &Context, r: Resolved<CriticalArgs>) -> CliResult<()> {
    let a = &r.args;
    let (theta0, beta0) = (a.theta0.unwrap(), a.beta0.unwrap());
    let reg = regime(a.regime.unwrap());
    let ic = dicke_core::model::InitialCondition::new(theta0, beta0)?;
    let closed = match reg {
        Regime::SpinDominated => critical_coupling_spin(theta0).ok(),
        Regime::BosonDominated if theta0 == 0.0 => critical_coupling_boson(beta0).ok(),
        Regime::BosonDominated => None,
    };
    let numeric = numeric_critical_coupling(reg, &ic);
    ctx.metadata(&r)?;
    let fmt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
    println!("closed_form: {}", fmt(closed));
    match &numeric {
        Ok(g) => println!("numeric: {g}"),
        Err(e) => println!("numeric: none ({e})"),
    }
    io::write_json(
        &ctx.path("critical.json"),
        &json!({
            "regime": reg,
            "initial": {"theta0": theta0, "beta0": beta0},
            "closed_form": closed,
            "numeric": numeric.as_ref().ok(),
            "numeric_error": numeric.as_ref().err().map(|e| e.to_string()),
        }),
    )?;
    Ok(())
}

fn fit(ctx: &Context, r: Resolved<FitArgs>) -> CliResult<()> {
    let a = &r.args;
    let input = a.input.as_deref().ok_or_else(|| CliError::Usage("--input is required".into()))?;
    if !input.exists() {
        return Err(CliError::Runtime(format!("input file {} not found", input.display())));
    }
    let (t, y) = io::read_columns(input, a.time_column.as_deref().unwrap(), a.column.as_deref().unwrap())?;
    let fits = match a.kind.unwrap() {
        FitKindArg::Exponential => vec![fit_exponential_saturation(&t, &y)],
        FitKindArg::Logistic => vec![fit_translated_logistic(&t, &y)],
        FitKindArg::Both => vec![fit_exponential_saturation(&t, &y), fit_translated_logistic(&t, &y)],
    };
    ctx.metadata(&r)?;
    for f in &fits {
        println!(
            "{:?}: γ = {:.6e}, rms = {:.3e}, converged = {}",
            f.kind, f.gamma_effective, f.residual_rms, f.converged
        );
    }
    io::write_json(&ctx.path("fit.json"), &json!({"input": input, "column": a.column, "fits": fits}))?;
    Ok(())
}

fn feasibility(ctx: &Context, r: Resolved<FeasibilityArgs>) -> CliResult<()> {
    let a = &r.args;
    let (two_g_hz, gamma_el, eta) = (
        required(a.two_g_hz, "two-g-hz")?,
        required(a.gamma_el, "gamma-el")?,
        required(a.eta, "eta")?,
    );
    let (d, o) = feasibility_ratios_hz(two_g_hz, gamma_el, eta)?;
    ctx.metadata(&r)?;
    println!("delta/gamma_el: {d}");
    println!("omega/gamma_el: {o}");
    io::write_json(
        &ctx.path("feasibility.json"),
        &json!({"two_g_hz": two_g_hz, "gamma_el": gamma_el, "eta": eta, "delta_over_gamma": d, "omega_over_gamma": o}),
    )?;
    Ok(())
}
