use serde::{Deserialize, Serialize};

use super::{PointRecord, Status, SweepResult, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub eta: f64,
    pub g_tilde_crit: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub points: Vec<BoundaryPoint>,
    /// Columns without a flip, or with missing data.
    pub notes: Vec<String>,
}

/// Per η column, the first g̃ where `|S̄_z|` rises through `threshold`, linearly
/// interpolated between the bracketing grid points.
pub fn boundary_extract(result: &SweepResult, threshold: f64) -> Result<BoundaryCurve> {
    if result.task != Task::ClassicalPhase {
        return Err(Error::WrongTask);
    }
    let mut columns: Vec<usize> = result.records.iter().map(|r| r.i_eta).collect();
    columns.sort_unstable();
    columns.dedup();
    let mut curve = BoundaryCurve::default();
    for i_eta in columns {
        let mut col: Vec<&PointRecord> = result
            .records
            .iter()
            .filter(|r| r.i_eta == i_eta && r.status == Status::Done)
            .collect();
        col.sort_by_key(|r| r.i_g);
        let Some(eta) = col.first().map(|r| r.eta) else {
            curve.notes.push(format!("column {i_eta}: no completed points"));
            continue;
        };
        let samples: Vec<(f64, f64)> = col
            .iter()
            .filter_map(|r| r.payload.sz_bar.map(|s| (r.g_tilde, s.abs())))
            .collect();
        match first_crossing(&samples, threshold) {
            Some(g) => curve.points.push(BoundaryPoint { eta, g_tilde_crit: g }),
            None => curve
                .notes
                .push(format!("η = {eta}: no classification flip in the g̃ range")),
        }
    }
    Ok(curve)
}

fn first_crossing(samples: &[(f64, f64)], threshold: f64) -> Option<f64> {
    samples.windows(2).find_map(|w| {
        let ((g0, s0), (g1, s1)) = (w[0], w[1]);
        (s0 <= threshold && s1 > threshold).then(|| g0 + (threshold - s0) / (s1 - s0) * (g1 - g0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::Payload;

    fn result(values: &[(f64, f64)]) -> SweepResult {
        SweepResult {
            records: values
                .iter()
                .enumerate()
                .map(|(i, &(g, s))| PointRecord {
                    i_g: i,
                    i_eta: 0,
                    g_tilde: g,
                    eta: 2.0,
                    status: Status::Done,
                    payload: Payload {
                        sz_bar: Some(s),
                        ..Default::default()
                    },
                    reason: None,
                })
                .collect(),
            plan_hash: String::new(),
            tool_version: String::new(),
            wall_time_s: 0.0,
            task: Task::ClassicalPhase,
            executed: 0,
        }
    }

    #[test]
    fn linear_field_recovered_exactly() {
        // |S̄_z| = 0.5 (g̃ − 1.3) for g̃ > 1.3 crosses 0.1 at 1.5.
        let vals: Vec<(f64, f64)> = (0..=20)
            .map(|i| {
                let g = 1.0 + 0.05 * i as f64;
                (g, -(0.5 * (g - 1.3)).max(0.0))
            })
            .collect();
        let c = boundary_extract(&result(&vals), 0.1).unwrap();
        assert_eq!(c.points.len(), 1);
        assert!((c.points[0].g_tilde_crit - 1.5).abs() < 1e-12);
    }

    #[test]
    fn no_flip_is_noted() {
        let c = boundary_extract(&result(&[(1.0, 0.0), (2.0, 0.01)]), 0.1).unwrap();
        assert!(c.points.is_empty());
        assert_eq!(c.notes.len(), 1);
    }

    #[test]
    fn wrong_task_refused() {
        let mut r = result(&[(1.0, 0.0)]);
        r.task = Task::LyapunovMap;
        assert!(matches!(boundary_extract(&r, 0.1), Err(Error::WrongTask)));
    }
}
