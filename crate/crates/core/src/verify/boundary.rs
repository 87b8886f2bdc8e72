use serde::{Deserialize, Serialize};

use crate::surface::{boundary_frame, SurfaceSample};

/// Residuals of the boundary relations on the equator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryReport {
    /// `|<N_bar, nu> + cos(theta)|`.
    pub angle: f64,
    pub frame: f64,
    /// `|h(mu, e_alpha)|`: the conormal is a principal direction.
    pub principal: f64,
    pub tangential: f64,
    pub conormal: f64,
    /// Only on axisymmetric grids.
    pub codazzi: Option<f64>,
}

pub fn boundary_report(sample: &SurfaceSample) -> BoundaryReport {
    let f = boundary_frame(sample);
    BoundaryReport {
        angle: f.angle_residual(),
        frame: f.frame_residual(),
        principal: f.principal_residual(),
        tangential: f.tangential_residual(),
        conormal: f.conormal_residual(),
        codazzi: f.codazzi_residual(),
    }
}

impl BoundaryReport {
    pub fn max(&self) -> f64 {
        [self.angle, self.frame, self.principal, self.tangential, self.conormal, self.codazzi.unwrap_or(0.0)]
            .into_iter()
            .fold(0.0, f64::max)
    }
}
