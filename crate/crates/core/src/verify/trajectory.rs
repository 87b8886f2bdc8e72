use serde::{Deserialize, Serialize};

use crate::cap::{cap_graph, cap_radius_from_quermass, CapParams};
use crate::error::{CapflowError, Result};
use crate::surface::HemisphereGrid;
use crate::trajectory::TrajectoryRecord;

/// Relative increase per step of `W_k`, `k >= 1`, tolerated as round-off.
pub const MONOTONE_SLACK: f64 = 1e-8;

/// `W_1(t_b) - W_1(t_a)` against the time integral of the predicted rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DissipationCheck {
    pub t_start: f64,
    pub t_end: f64,
    pub measured: f64,
    pub predicted: f64,
    /// `|measured - predicted| / |predicted|`.
    pub rel_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub rows: usize,
    /// `max_t |W_0(t) - W_0(0)| / W_0(0)`.
    pub w0_drift: f64,
    /// Monitored increases beyond the slack, per `k = 1..=n`.
    pub violations_by_k: Vec<usize>,
    pub w1_violations: usize,
    pub dissipation: Option<DissipationCheck>,
}

pub fn monotonicity_report(traj: &TrajectoryRecord) -> MonotonicityReport {
    let rows = &traj.rows;
    let Some(first) = rows.first() else {
        return MonotonicityReport {
            rows: 0,
            w0_drift: 0.0,
            violations_by_k: Vec::new(),
            w1_violations: 0,
            dissipation: None,
        };
    };
    let w0 = first.w[0];
    let w0_drift = rows.iter().map(|r| ((r.w[0] - w0) / w0).abs()).fold(0.0, f64::max);
    let n = first.w.len() - 1;
    let violations_by_k: Vec<usize> = (1..=n)
        .map(|k| {
            rows.windows(2)
                .filter(|p| {
                    let steps = p[1].step.saturating_sub(p[0].step).max(1) as f64;
                    p[1].w[k] - p[0].w[k] > MONOTONE_SLACK * steps * p[0].w[k].abs()
                })
                .count()
        })
        .collect();
    MonotonicityReport {
        rows: rows.len(),
        w0_drift,
        w1_violations: violations_by_k.first().copied().unwrap_or(0),
        violations_by_k,
        dissipation: dissipation_check(traj),
    }
}

/// Integrated dissipation identity for `W_1` over the middle third of the
/// run, by the trapezoid rule on the monitored rows.
pub fn dissipation_check(traj: &TrajectoryRecord) -> Option<DissipationCheck> {
    let rows = &traj.rows;
    let (t0, t1) = (rows.first()?.t, rows.last()?.t);
    let (a, b) = (t0 + (t1 - t0) / 3.0, t0 + 2.0 * (t1 - t0) / 3.0);
    let mid: Vec<_> = rows.iter().filter(|r| r.t >= a && r.t <= b).collect();
    if mid.len() < 3 || mid.iter().any(|r| r.dissipation.is_none()) {
        return None;
    }
    let measured = mid[mid.len() - 1].w[1] - mid[0].w[1];
    let predicted: f64 = mid
        .windows(2)
        .map(|p| 0.5 * (p[0].dissipation.unwrap_or(0.0) + p[1].dissipation.unwrap_or(0.0)) * (p[1].t - p[0].t))
        .sum();
    Some(DissipationCheck {
        t_start: mid[0].t,
        t_end: mid[mid.len() - 1].t,
        measured,
        predicted,
        rel_error: (measured - predicted).abs() / predicted.abs(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub steps: usize,
    pub final_t: f64,
    pub final_max_f: f64,
    /// Radius of the cap with the initial volume.
    pub r_inf: f64,
    /// Sup distance of the final graph to that cap.
    pub final_dist: f64,
    /// `dist_to_cap` is non-increasing over the last third of the rows.
    pub tail_monotone: bool,
    pub kappa_inf: f64,
}

pub fn convergence_check(traj: &TrajectoryRecord, theta: f64, grid: &HemisphereGrid) -> Result<ConvergenceReport> {
    let first = traj
        .rows
        .first()
        .ok_or_else(|| CapflowError::invalid("empty trajectory"))?;
    if traj.final_u.len() != grid.node_count() {
        return Err(CapflowError::invalid(format!(
            "trajectory has {} nodes, grid {}",
            traj.final_u.len(),
            grid.node_count()
        )));
    }
    let r_inf = cap_radius_from_quermass(theta, grid.n, 0, first.w[0])?;
    let cap = cap_graph(&CapParams::new(theta, r_inf, grid.n)?, grid);
    let final_dist = traj
        .final_u
        .iter()
        .zip(&cap.u)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    let tail = &traj.rows[traj.rows.len() - traj.rows.len() / 3..];
    let tail_monotone = tail.windows(2).all(|p| {
        let (a, b) = (p[0].dist_to_cap, p[1].dist_to_cap);
        a.is_nan() || b.is_nan() || b <= a * (1.0 + 1e-6) + 1e-12
    });
    Ok(ConvergenceReport {
        converged: traj.converged,
        steps: traj.steps,
        final_t: traj.final_t,
        final_max_f: traj.last().map_or(f64::NAN, |r| r.max_f),
        r_inf,
        final_dist,
        tail_monotone,
        kappa_inf: traj.kappa_inf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{run, FlowConfig, FlowMode, Scheme};
    use crate::initial::perturbed_cap;
    use crate::trajectory::TrajectoryRow;
    use std::f64::consts::FRAC_PI_2;

    fn row(step: usize, t: f64, w: Vec<f64>, d: f64) -> TrajectoryRow {
        TrajectoryRow {
            step,
            t,
            dt: 0.1,
            max_f: 0.0,
            kappa_min: 1.0,
            w,
            dist_to_cap: 0.0,
            dissipation: Some(d),
        }
    }

    #[test]
    fn synthetic_increase_is_a_violation() {
        let traj = TrajectoryRecord {
            rows: vec![
                row(0, 0.0, vec![1.0, 2.0, 3.0], -1.0),
                row(1, 0.1, vec![1.0, 1.9, 3.0], -1.0),
                row(2, 0.2, vec![1.0, 1.95, 3.0], -1.0),
            ],
            ..Default::default()
        };
        let rep = monotonicity_report(&traj);
        assert_eq!(rep.violations_by_k, vec![1, 0]);
        assert_eq!(rep.w0_drift, 0.0);
    }

    #[test]
    fn linear_decay_matches_constant_dissipation() {
        let rows = (0..31).map(|i| {
            let t = i as f64 * 0.1;
            row(i, t, vec![1.0, 5.0 - 2.0 * t], -2.0)
        });
        let traj = TrajectoryRecord {
            rows: rows.collect(),
            ..Default::default()
        };
        let d = dissipation_check(&traj).unwrap();
        assert!(d.rel_error < 1e-12, "{d:?}");
    }

    #[test]
    fn perturbed_run_conserves_and_dissipates() {
        let grid = HemisphereGrid::axisym(2, 64).unwrap();
        let mut cfg = FlowConfig::new(FlowMode::Mct, FRAC_PI_2, grid);
        cfg.scheme = Scheme::Imex;
        let rec = run(&cfg, perturbed_cap(FRAC_PI_2, 1.0, 0.1, 1, &grid).unwrap()).unwrap();
        let m = monotonicity_report(&rec);
        assert!(m.w0_drift < 1e-3);
        assert_eq!(m.w1_violations, 0);
        let c = convergence_check(&rec, FRAC_PI_2, &grid).unwrap();
        assert!(c.converged && c.final_dist < 5e-3 && c.tail_monotone, "{c:?}");
    }
}
