//! Initial data on a grid.

use serde::{Deserialize, Serialize};

use crate::cap::{cap_graph, CapParams};
use crate::error::{CapflowError, Result};
use crate::surface::stencil::project_bc;
use crate::surface::{GraphState, GridMode, HemisphereGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialShape {
    Cap {
        radius: f64,
    },
    Flat,
    /// A cap plus `-amplitude * cos(2 m beta)`, projected onto the boundary
    /// condition. With `m = 1` this pulls the pole in and keeps moderate
    /// amplitudes convex. On full 2-D grids a `sin^2(beta) cos(xi)` tilt of the same
    /// amplitude is added.
    PerturbedCap {
        radius: f64,
        amplitude: f64,
        wavenumber: u32,
    },
}

impl InitialShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialShape::Cap { radius } if !(radius > 0.0 && radius.is_finite()) => {
                Err(CapflowError::invalid(format!("cap radius {radius} must be positive")))
            }
            InitialShape::PerturbedCap {
                radius,
                amplitude,
                wavenumber,
            } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(CapflowError::invalid(format!("cap radius {radius} must be positive")));
                }
                if !(amplitude >= 0.0 && amplitude.is_finite()) {
                    return Err(CapflowError::invalid(format!("amplitude {amplitude} must be >= 0")));
                }
                if wavenumber < 1 {
                    return Err(CapflowError::invalid("wavenumber must be >= 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, theta: f64, grid: &HemisphereGrid) -> Result<GraphState> {
        self.validate()?;
        match *self {
            InitialShape::Cap { radius } => Ok(cap_graph(&CapParams::new(theta, radius, grid.n)?, grid)),
            InitialShape::Flat => Ok(cap_graph(&CapParams::flat(theta, grid.n)?, grid)),
            InitialShape::PerturbedCap {
                radius,
                amplitude,
                wavenumber,
            } => perturbed_cap(theta, radius, amplitude, wavenumber, grid),
        }
    }
}

pub fn perturbed_cap(
    theta: f64,
    radius: f64,
    amplitude: f64,
    wavenumber: u32,
    grid: &HemisphereGrid,
) -> Result<GraphState> {
    let mut s = cap_graph(&CapParams::new(theta, radius, grid.n)?, grid);
    let m = 2.0 * wavenumber as f64;
    for k in 0..grid.node_count() {
        let (i, j) = grid.split(k);
        let b = grid.beta(i);
        s.u[k] -= amplitude * (m * b).cos();
        if grid.mode == GridMode::Full2d {
            s.u[k] += amplitude * b.sin().powi(2) * grid.xi(j).cos();
        }
    }
    project_bc(&s, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::stencil::bc_residual;
    use std::f64::consts::PI;

    #[test]
    fn perturbed_cap_meets_the_boundary_condition() {
        for grid in [HemisphereGrid::axisym(2, 64).unwrap(), HemisphereGrid::full2d(33, 16).unwrap()] {
            let s = perturbed_cap(PI / 3.0, 1.0, 0.1, 1, &grid).unwrap();
            assert!(bc_residual(&s, &grid) < 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_is_nearly_the_cap() {
        let grid = HemisphereGrid::axisym(2, 128).unwrap();
        let a = perturbed_cap(1.0, 1.5, 0.0, 2, &grid).unwrap();
        let b = InitialShape::Cap { radius: 1.5 }.build(1.0, &grid).unwrap();
        let d = a.u.iter().zip(&b.u).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn reference_perturbations_are_convex() {
        let grid = HemisphereGrid::axisym(2, 128).unwrap();
        for theta in [PI / 3.0, PI / 2.0] {
            let s = perturbed_cap(theta, 1.0, 0.1, 1, &grid).unwrap();
            assert!(crate::surface::reconstruct(&s, &grid).unwrap().kappa_min() > 0.3);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let grid = HemisphereGrid::axisym(2, 16).unwrap();
        let bad = InitialShape::PerturbedCap {
            radius: 1.0,
            amplitude: -0.1,
            wavenumber: 1,
        };
        assert!(bad.build(1.0, &grid).is_err());
        assert!(InitialShape::Cap { radius: 0.0 }.build(1.0, &grid).is_err());
    }
}
