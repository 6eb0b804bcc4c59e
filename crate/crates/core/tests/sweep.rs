use std::fs;

use dicke_core::sweep::{
    read_records, resume_sweep, run_sweep, Axis, PointRecord, Status, SweepPlan, Task, RECORDS_FILE,
};

fn small_plan(task: Task) -> SweepPlan {
    let mut plan = SweepPlan::new(Axis::linear(0.6, 2.2, 5), Axis::log(0.3, 3.0, 3), task);
    plan.seed = 7;
    plan.classical.t_final = 200.0;
    plan.lyapunov.t_total = 300.0;
    plan.lyapunov.t_transient = 50.0;
    plan
}

fn sorted(mut v: Vec<PointRecord>) -> Vec<PointRecord> {
    v.sort_by_key(|r| (r.i_eta, r.i_g));
    v
}

#[test]
fn worker_count_does_not_change_results() {
    for task in [Task::ClassicalPhase, Task::LyapunovMap] {
        let plan = small_plan(task);
        let mut runs = Vec::new();
        for workers in [1, 4, 8] {
            let dir = tempfile::tempdir().unwrap();
            runs.push(sorted(run_sweep(&plan, dir.path(), workers).unwrap().records));
        }
        assert_eq!(runs[0], runs[1], "{task:?}");
        assert_eq!(runs[0], runs[2], "{task:?}");
    }
}

#[test]
fn resume_after_crash_and_corruption_matches() {
    let plan = small_plan(Task::LyapunovMap);
    let dir = tempfile::tempdir().unwrap();
    let full = sorted(run_sweep(&plan, dir.path(), 2).unwrap().records);

    // Drop the last rows and tear the one before them, as a kill mid-write would.
    let path = dir.path().join(RECORDS_FILE);
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let keep = lines.len() - 4;
    let mut damaged = lines[..keep].join("\n");
    damaged.push('\n');
    damaged.push_str(&lines[keep][..lines[keep].len() / 2]);
    fs::write(&path, damaged).unwrap();
    assert!(read_records(&path).unwrap().valid.len() < full.len());

    let resumed = resume_sweep(&plan, dir.path(), 3).unwrap();
    assert!(resumed.executed >= 4);
    assert_eq!(sorted(resumed.records), full);
    assert_eq!(sorted(read_records(&path).unwrap().valid), full);

    let again = resume_sweep(&plan, dir.path(), 1).unwrap();
    assert_eq!(again.executed, 0);
}

#[test]
fn resume_rejects_a_different_plan() {
    let plan = small_plan(Task::ClassicalPhase);
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&plan, dir.path(), 1).unwrap();
    let mut other = plan.clone();
    other.theta0 = 0.2;
    assert!(matches!(
        resume_sweep(&other, dir.path(), 1),
        Err(dicke_core::Error::PlanMismatch { .. })
    ));
}

/// Chaotic points sit where the classification is noisy: at least 60% of points with
/// λ > 0.01 in η ∈ [0.8, 2] have a neighbour along g̃ with the opposite label.
#[test]
fn chaos_sits_on_noisy_classification() {
    let axis_g = Axis::linear(0.5, 2.5, 41);
    let axis_eta = Axis::log(0.8, 2.0, 5);
    let phase = SweepPlan::new(axis_g, axis_eta, Task::ClassicalPhase);
    let lyap = SweepPlan::new(axis_g, axis_eta, Task::LyapunovMap);
    let workers = dicke_core::parallel::current_threads();
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let phases = run_sweep(&phase, d1.path(), workers).unwrap();
    let lambdas = run_sweep(&lyap, d2.path(), workers).unwrap();

    let label = |i_eta, i_g| phases.get(i_eta, i_g).and_then(|r| r.payload.label);
    let mut chaotic = 0;
    let mut flipped = 0;
    for r in &lambdas.records {
        if r.status != Status::Done || r.payload.lambda.unwrap() <= 0.01 {
            continue;
        }
        chaotic += 1;
        let here = label(r.i_eta, r.i_g);
        let left = r.i_g.checked_sub(1).and_then(|i| label(r.i_eta, i));
        let right = label(r.i_eta, r.i_g + 1);
        if [left, right].iter().any(|n| n.is_some() && *n != here) {
            flipped += 1;
        }
    }
    assert!(chaotic > 5, "only {chaotic} chaotic points");
    let share = flipped as f64 / chaotic as f64;
    println!("{flipped}/{chaotic} chaotic points next to a flip");
    assert!(share >= 0.6, "{flipped}/{chaotic}");
}
