//! Star-shaped capillary hypersurfaces as radial graphs `u = log rho` over
//! the closed upper hemisphere of the half-space picture.

mod export;
mod frame;
mod sample;
pub(crate) mod stencil;

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{CapflowError, Result};

pub use export::{write_axisym_csv, write_obj};
pub use frame::{boundary_frame, BoundaryFrame, BoundaryNode};
pub use sample::{elementary_means, reconstruct, SurfaceSample};
pub use stencil::{bc_residual, boundary_slope, enforce_bc, project_bc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    Axisym,
    Full2d,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HemisphereGrid {
    pub mode: GridMode,
    pub n: usize,
    pub n_beta: usize,
    /// Azimuth count; 1 for axisymmetric grids.
    pub n_xi: usize,
}

impl HemisphereGrid {
    pub fn axisym(n: usize, n_beta: usize) -> Result<Self> {
        Self::new(GridMode::Axisym, n, n_beta, 1)
    }

    pub fn full2d(n_beta: usize, n_xi: usize) -> Result<Self> {
        Self::new(GridMode::Full2d, 2, n_beta, n_xi)
    }

    pub fn new(mode: GridMode, n: usize, n_beta: usize, n_xi: usize) -> Result<Self> {
        if n < 2 {
            return Err(CapflowError::invalid(format!("dimension n = {n} must be >= 2")));
        }
        if n_beta < 16 {
            return Err(CapflowError::invalid(format!("n_beta = {n_beta} must be >= 16")));
        }
        match mode {
            GridMode::Axisym if n_xi != 1 => {
                return Err(CapflowError::invalid("axisymmetric grids have n_xi = 1"))
            }
            GridMode::Full2d if n != 2 => {
                return Err(CapflowError::invalid("full2d grids require n = 2"))
            }
            GridMode::Full2d if n_xi < 8 => {
                return Err(CapflowError::invalid(format!("n_xi = {n_xi} must be >= 8")))
            }
            _ => {}
        }
        Ok(Self {
            mode,
            n,
            n_beta,
            n_xi,
        })
    }

    /// Parses `axisym:<n_beta>` or `full2d:<n_beta>x<n_xi>`.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let bad = || CapflowError::invalid(format!("grid `{spec}` is not axisym:N or full2d:NxM"));
        let (kind, dims) = spec.split_once(':').ok_or_else(bad)?;
        match kind {
            "axisym" => Self::axisym(n, dims.trim().parse().map_err(|_| bad())?),
            "full2d" => {
                if n != 2 {
                    return Err(CapflowError::invalid("full2d grids require n = 2"));
                }
                let (a, b) = dims.split_once('x').ok_or_else(bad)?;
                Self::full2d(
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                )
            }
            _ => Err(bad()),
        }
    }

    pub fn label(&self) -> String {
        match self.mode {
            GridMode::Axisym => format!("axisym:{}", self.n_beta),
            GridMode::Full2d => format!("full2d:{}x{}", self.n_beta, self.n_xi),
        }
    }

    pub fn h_beta(&self) -> f64 {
        FRAC_PI_2 / (self.n_beta - 1) as f64
    }

    pub fn h_xi(&self) -> f64 {
        TAU / self.n_xi as f64
    }

    /// Smallest physical spacing; the first ring limits full 2-D grids.
    pub fn h_min(&self) -> f64 {
        match self.mode {
            GridMode::Axisym => self.h_beta(),
            GridMode::Full2d => self.h_beta().min(self.h_beta().sin() * self.h_xi()),
        }
    }

    pub fn beta(&self, i: usize) -> f64 {
        if i == self.n_beta - 1 {
            FRAC_PI_2
        } else {
            i as f64 * self.h_beta()
        }
    }

    pub fn xi(&self, j: usize) -> f64 {
        j as f64 * self.h_xi()
    }

    pub fn node_count(&self) -> usize {
        self.n_beta * self.n_xi
    }

    /// `(beta index, azimuth index)` of a flat node index.
    pub fn split(&self, node: usize) -> (usize, usize) {
        (node / self.n_xi, node % self.n_xi)
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_xi + j
    }

    /// Flat indices of the equator nodes.
    pub fn equator(&self) -> std::ops::Range<usize> {
        let start = (self.n_beta - 1) * self.n_xi;
        start..start + self.n_xi
    }
}

/// The flowing unknown: `u = log rho` on every grid node, β-major, plus time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphState {
    pub u: Vec<f64>,
    pub t: f64,
    pub theta: f64,
    /// Equator ghost values of the last boundary enforcement; derived data.
    #[serde(skip)]
    pub ghost: Vec<f64>,
}

impl GraphState {
    pub fn new(u: Vec<f64>, theta: f64) -> Self {
        Self {
            u,
            t: 0.0,
            theta,
            ghost: Vec::new(),
        }
    }

    pub fn check(&self, grid: &HemisphereGrid) -> Result<()> {
        if self.u.len() != grid.node_count() {
            return Err(CapflowError::invalid(format!(
                "state has {} values, grid {} needs {}",
                self.u.len(),
                grid.label(),
                grid.node_count()
            )));
        }
        if let Some(i) = self.u.iter().position(|v| !v.is_finite()) {
            return Err(CapflowError::invalid(format!("u is not finite at node {i}")));
        }
        crate::cap::validate_theta(self.theta)
    }

    /// Smallest and largest value on the latitude ring `i`.
    pub fn meridian_extremes(&self, grid: &HemisphereGrid, i: usize) -> (f64, f64) {
        (0..grid.n_xi)
            .map(|j| self.u[grid.node(i, j)])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    }

    /// Values along the meridian at azimuth index `j`.
    pub fn meridian(&self, grid: &HemisphereGrid, j: usize) -> Vec<f64> {
        (0..grid.n_beta).map(|i| self.u[grid.node(i, j)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_lines_include_pole_and_equator() {
        let g = HemisphereGrid::axisym(2, 64).unwrap();
        assert_eq!(g.beta(0), 0.0);
        assert_eq!(g.beta(63), FRAC_PI_2);
        assert!((g.beta(62) + g.h_beta() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn parse_grid_specs() {
        assert_eq!(HemisphereGrid::parse("axisym:64", 3).unwrap(), HemisphereGrid::axisym(3, 64).unwrap());
        assert_eq!(HemisphereGrid::parse("full2d:32x16", 2).unwrap().node_count(), 512);
        assert!(HemisphereGrid::parse("full2d:32x16", 3).is_err());
        assert!(HemisphereGrid::parse("axisym:8", 2).is_err());
        assert!(HemisphereGrid::parse("polar:8", 2).is_err());
    }

    #[test]
    fn full2d_first_ring_limits_spacing() {
        let g = HemisphereGrid::full2d(33, 32).unwrap();
        assert!(g.h_min() < g.h_beta());
        assert_eq!(g.equator().len(), 32);
        assert_eq!(g.split(g.node(5, 7)), (5, 7));
    }
}
