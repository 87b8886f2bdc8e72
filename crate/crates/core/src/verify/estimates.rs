use serde::{Deserialize, Serialize};

use crate::cap::{cap_shell, CapShell};
use crate::error::{CapflowError, Result};
use crate::geometry::dot;
use crate::surface::{GraphState, HemisphereGrid, SurfaceSample};

/// Quantitative convexity constants of a cap shell `R1 <= R2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateBundle {
    pub theta: f64,
    pub r1: f64,
    pub r2: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
}

fn center(r: f64, ct: f64) -> f64 {
    (r * r + 2.0 * r * ct + 1.0).sqrt()
}

impl EstimateBundle {
    pub fn new(theta: f64, r1: f64, r2: f64) -> Result<Self> {
        crate::cap::validate_theta(theta)?;
        if !(r1 > 0.0 && r1.is_finite() && r2 >= r1) {
            return Err(CapflowError::invalid(format!("shell radii must satisfy 0 < R1 <= R2 (got {r1}, {r2})")));
        }
        let (st, ct) = theta.sin_cos();
        let delta0 = if r2.is_infinite() {
            0.0
        } else {
            st * st / (center(r2, ct) + r2 + ct)
        };
        let c1 = center(r1, ct);
        let delta1 = 1.0 - (1.0 + r1 * ct) / c1;
        Ok(Self {
            theta,
            r1,
            r2,
            delta0,
            delta1,
            delta2: 0.5 * delta1,
            delta3: delta1,
            delta4: r1 * st / c1,
        })
    }

    pub fn from_shell(theta: f64, shell: CapShell) -> Result<Self> {
        Self::new(theta, shell.r1, shell.r2)
    }

    /// Bracket the graph in cap profiles and build the bundle.
    pub fn bracketing(state: &GraphState, grid: &HemisphereGrid) -> Result<Self> {
        Self::from_shell(state.theta, cap_shell(state, grid)?)
    }

    /// `cos(theta) + delta0 <= 1 - delta3`.
    pub fn is_consistent(&self) -> bool {
        self.theta.cos() + self.delta0 <= 1.0 - self.delta3 + 1e-15
    }

    /// Run-level bounds `c1 <= u <= c2` implied by the constants.
    pub fn c0_bounds(&self) -> (f64, f64) {
        let ct = self.theta.cos();
        (
            0.5 * (1.0 + 2.0 * (ct + self.delta0)).ln(),
            0.5 * (1.0 + 4.0 / (self.delta1 * self.delta1)).ln(),
        )
    }

    /// Run-level gradient bound `|grad u| <= c3`.
    pub fn c1_bound(&self) -> f64 {
        2.0 / self.delta2 * (1.0 + 4.0 / (self.delta1 * self.delta1)).sqrt()
    }
}

/// Smallest slack of each pointwise estimate over the sample; all are
/// non-negative when the estimates hold exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub bundle: EstimateBundle,
    pub tol_disc: f64,
    /// `min <x - e, nu> - delta1`.
    pub support: f64,
    /// `min <X_e, nu> - delta2`.
    pub star: f64,
    /// `min <x, e> - cos(theta) - delta0`.
    pub height_low: f64,
    /// `1 - delta3 - max <x, e>`.
    pub height_high: f64,
    /// `-delta4 - max <e, nu>`.
    pub tilt: f64,
    pub passed: bool,
}

pub fn estimates_check(sample: &SurfaceSample, bundle: &EstimateBundle, tol_disc: f64) -> EstimateReport {
    let n = sample.n();
    let ct = bundle.theta.cos();
    let (mut support, mut star, mut lo, mut hi, mut tilt) =
        (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for i in 0..sample.node_count() {
        let x = sample.x(i);
        let nu = sample.nu(i);
        let xe = x[n];
        support = support.min(dot(x, nu) - nu[n] - bundle.delta1);
        star = star.min(sample.xe_nu[i] - bundle.delta2);
        lo = lo.min(xe - ct - bundle.delta0);
        hi = hi.min(1.0 - bundle.delta3 - xe);
        tilt = tilt.min(-bundle.delta4 - nu[n]);
    }
    let passed = [support, star, lo, hi, tilt].iter().all(|&s| s >= -tol_disc);
    EstimateReport {
        bundle: *bundle,
        tol_disc,
        support,
        star,
        height_low: lo,
        height_high: hi,
        tilt,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cap::{cap_graph, CapParams};
    use crate::surface::reconstruct;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn right_angle_unit_shell_constants() {
        let b = EstimateBundle::new(FRAC_PI_2, 1.0, 1.0).unwrap();
        let s = 0.5f64.sqrt();
        assert!((b.delta1 - (1.0 - s)).abs() < 1e-15);
        assert!((b.delta4 - s).abs() < 1e-15);
        assert!((b.delta2 - 0.5 * (1.0 - s)).abs() < 1e-15);
        assert!((b.delta1 - 0.29289).abs() < 1e-5 && (b.delta2 - 0.14645).abs() < 1e-5);
        assert!(b.is_consistent());
    }

    #[test]
    fn consistency_holds_across_shells() {
        for &theta in &[0.3, 1.0, PI / 3.0, FRAC_PI_2] {
            for &r1 in &[0.2, 1.0, 5.0] {
                for &r2 in &[r1, 2.0 * r1, f64::INFINITY] {
                    assert!(EstimateBundle::new(theta, r1, r2).unwrap().is_consistent());
                }
            }
        }
    }

    #[test]
    fn exact_caps_satisfy_estimates() {
        for &theta in &[PI / 3.0, FRAC_PI_2] {
            let p = CapParams::new(theta, 1.2, 2).unwrap();
            let grid = HemisphereGrid::axisym(2, 128).unwrap();
            let state = cap_graph(&p, &grid);
            let bundle = EstimateBundle::bracketing(&state, &grid).unwrap();
            let rep = estimates_check(&reconstruct(&state, &grid).unwrap(), &bundle, 1e-6);
            assert!(rep.passed, "{rep:?}");
            let (c1, c2) = bundle.c0_bounds();
            assert!(state.u.iter().all(|&u| u >= c1 && u <= c2));
        }
    }
}
