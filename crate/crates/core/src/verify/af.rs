use serde::{Deserialize, Serialize};

use crate::cap::{cap_graph, cap_quermass_all, cap_radius_from_quermass, CapParams, CapProfileTable};
use crate::error::{CapflowError, Result};
use crate::quermass::quermass_vector;
use crate::surface::{reconstruct, HemisphereGrid, SurfaceSample};

/// Relative excess over the flat-ball volume still read as the flat ball.
pub const FLAT_CLAMP: f64 = 1e-6;

/// Cap parameters with `f_0 = w0`, clamping volumes within [`FLAT_CLAMP`]
/// of the flat-ball limit to the flat ball.
pub fn cap_with_volume(theta: f64, n: usize, w0: f64) -> Result<CapParams> {
    match cap_radius_from_quermass(theta, n, 0, w0) {
        Ok(r) => CapParams::new(theta, r, n),
        Err(CapflowError::OutOfRange { value, hi, .. }) if value >= hi && value <= hi * (1.0 + FLAT_CLAMP) => {
            CapParams::flat(theta, n)
        }
        Err(e) => Err(e),
    }
}

/// `W_k - f_k(f_0^{-1}(W_0))` of a convex sample.
pub fn af_check(sample: &SurfaceSample, k: usize) -> Result<f64> {
    let n = sample.n();
    if k == 0 || k >= n {
        return Err(CapflowError::invalid(format!("AF index k = {k} outside [1, {}]", n - 1)));
    }
    let h = sample.grid.h_min();
    let kmin = sample.kappa_min();
    if kmin < -h * h {
        return Err(CapflowError::invalid(format!("sample is not convex (kappa_min = {kmin:e})")));
    }
    let w = quermass_vector(sample)?.w;
    let cap = cap_with_volume(sample.theta, n, w[0])?;
    Ok(w[k] - cap_quermass_all(&cap)?[k])
}

/// Discretization budget of one grid, measured on exact caps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapCalibration {
    pub theta: f64,
    pub grid: HemisphereGrid,
    /// Largest quermassintegral or AF-slack error over the calibration caps.
    pub max_error: f64,
    /// `CALIBRATION_FACTOR * max_error`.
    pub tol_disc: f64,
}

pub const CALIBRATION_FACTOR: f64 = 4.0;
pub const CALIBRATION_RADII: [f64; 3] = [0.5, 1.0, 2.0];

pub fn calibrate(theta: f64, grid: &HemisphereGrid) -> Result<CapCalibration> {
    let n = grid.n;
    let mut caps: Vec<CapParams> = CALIBRATION_RADII
        .iter()
        .map(|&r| CapParams::new(theta, r, n))
        .collect::<Result<_>>()?;
    caps.push(CapParams::flat(theta, n)?);
    // warm the inverse table outside the parallel section
    CapProfileTable::cached(theta, n)?;
    let errors = crate::par::map_tasks(&caps, |_, p| -> Result<f64> {
        let sample = reconstruct(&cap_graph(p, grid), grid)?;
        let w = quermass_vector(&sample)?.w;
        let exact = cap_quermass_all(p)?;
        let mut worst = w.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        for k in 1..n {
            worst = worst.max(af_check(&sample, k)?.abs());
        }
        Ok(worst)
    });
    let mut max_error: f64 = 0.0;
    for e in errors {
        max_error = max_error.max(e?);
    }
    Ok(CapCalibration {
        theta,
        grid: *grid,
        max_error,
        tol_disc: (CALIBRATION_FACTOR * max_error).max(1e-13),
    })
}

/// `tol_disc` of a grid at contact angle `theta`.
pub fn calibrate_tol_disc(theta: f64, grid: &HemisphereGrid) -> Result<f64> {
    Ok(calibrate(theta, grid)?.tol_disc)
}
