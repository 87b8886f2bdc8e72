//! Capillary quermassintegrals `W_{k,theta}` and the spherical
//! quermassintegrals of the boundary region, assembled from surface
//! integrals of the normalized mean curvatures.
//!
//! The boundary constants of the general assembly carry a sign that is
//! fixed empirically: [`resolve_sign`] differentiates both candidates along
//! the exact cap family and keeps the one whose derivative matches
//! `(n+1-k)/(n+1) int H_k f dA`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::cap::{cap_quermass_all_with, cap_variation_integral, sphere_area, CapParams};
use crate::error::{CapflowError, Result};
use crate::quad::sin_power_integral;
use crate::surface::{boundary_frame, GridMode, SurfaceSample};

/// Sign of the sum of lower spherical quermassintegrals in `W_{k+1,theta}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySign {
    /// `- cos^{k-1} theta sum (-1)^{k+l} ...`; at theta = pi/2 this leaves
    /// `+ k/(n-k+1) W_{k-1}`.
    Alternating,
    /// The opposite sign; at theta = pi/2 this leaves `- k/(n-k+1) W_{k-1}`.
    Reversed,
}

impl BoundarySign {
    fn factor(self) -> f64 {
        match self {
            BoundarySign::Alternating => 1.0,
            BoundarySign::Reversed => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BoundarySign::Alternating => "alternating",
            BoundarySign::Reversed => "reversed",
        }
    }
}

fn binomial(k: usize, l: usize) -> f64 {
    (0..l).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// `W_{0,theta}, ..., W_{n,theta}` from the volume, `int_h[k] = int H_k dA`
/// for `k < n` (so `int_h[0]` is the area), and the spherical
/// quermassintegrals `ws[l]`, `l < n`, of the boundary region.
pub fn assemble_theta(
    n: usize,
    theta: f64,
    volume: f64,
    int_h: &[f64],
    ws: &[f64],
    sign: BoundarySign,
) -> Vec<f64> {
    let (st, ct) = theta.sin_cos();
    let np1 = (n + 1) as f64;
    let mut w = Vec::with_capacity(n + 1);
    w.push(volume);
    w.push((int_h[0] - ct * ws[0]) / np1);
    for k in 1..n {
        let mut sum = 0.0;
        for l in 0..k {
            let parity = if (k + l) % 2 == 0 { 1.0 } else { -1.0 };
            let bracket = (n - k) as f64 * ct * ct + (k - l) as f64;
            sum += parity / (n - l) as f64
                * binomial(k, l)
                * bracket
                * ct.powi((k - 1 - l) as i32)
                * st.powi(l as i32)
                * ws[l];
        }
        w.push((int_h[k] - ct * st.powi(k as i32) * ws[k] - sign.factor() * sum) / np1);
    }
    w
}

/// The free-boundary (`theta = pi/2`) specialization of [`assemble_theta`].
pub fn assemble_free_boundary(
    n: usize,
    volume: f64,
    int_h: &[f64],
    ws: &[f64],
    sign: BoundarySign,
) -> Vec<f64> {
    let np1 = (n + 1) as f64;
    let mut w = vec![volume, int_h[0] / np1];
    for k in 1..n {
        let c = k as f64 / (n - k + 1) as f64;
        w.push((int_h[k] + sign.factor() * c * ws[k - 1]) / np1);
    }
    w
}

/// Spherical quermassintegrals `W_0, ..., W_{n-1}` of a region in `S^n`
/// from its area, boundary measure, and `int_hs[k] = int H_k^S ds` for
/// `1 <= k <= n-2` (entry 0 is ignored).
pub fn spherical_quermass(n: usize, area: f64, length: f64, int_hs: &[f64]) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![area];
    if n > 1 {
        w.push(length / nf);
    }
    for k in 1..n.saturating_sub(1) {
        let next = int_hs[k] / nf + k as f64 / (n - k + 1) as f64 * w[k - 1];
        w.push(next);
    }
    w
}

/// Spherical quermassintegrals of the geodesic ball of radius `alpha` in `S^n`.
pub fn spherical_quermass_latitude(n: usize, alpha: f64) -> Result<Vec<f64>> {
    let omega = sphere_area(n - 1);
    let area = omega * sin_power_integral(n as u32 - 1, alpha)?;
    let length = omega * alpha.sin().powi(n as i32 - 1);
    let cot = alpha.cos() / alpha.sin();
    let int_hs: Vec<f64> = (0..n).map(|k| cot.powi(k as i32) * length).collect();
    Ok(spherical_quermass(n, area, length, &int_hs))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryRegion {
    /// `|widehat{dSigma}|`, the region of the sphere bounded by `dSigma` around `e`.
    pub area: f64,
    /// `|dSigma|`.
    pub length: f64,
    pub ws: Vec<f64>,
    /// Set when the geodesic curvature of the boundary changes sign.
    pub nonconvex: bool,
}

pub fn boundary_region(sample: &SurfaceSample) -> Result<BoundaryRegion> {
    let n = sample.n();
    match sample.grid.mode {
        GridMode::Axisym => {
            let x = sample.x(sample.grid.n_beta - 1);
            let alpha = x[0].atan2(x[n]);
            let ws = spherical_quermass_latitude(n, alpha)?;
            Ok(BoundaryRegion {
                area: ws[0],
                length: sphere_area(n - 1) * alpha.sin().powi(n as i32 - 1),
                ws,
                nonconvex: alpha > FRAC_PI_2 + 1e-12,
            })
        }
        GridMode::Full2d => {
            let grid = sample.grid;
            let frame = boundary_frame(sample);
            let hx = grid.h_xi();
            let mut length = 0.0;
            let mut turning = 0.0;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for b in &frame.nodes {
                let t = sample.d_xi(b.node).expect("azimuthal tangent");
                let ds = crate::geometry::dot(t, t).sqrt() * hx;
                length += ds;
                turning += b.hhat[0] * ds;
                lo = lo.min(b.hhat[0]);
                hi = hi.max(b.hhat[0]);
            }
            let area = TAU - turning;
            Ok(BoundaryRegion {
                area,
                length,
                ws: spherical_quermass(2, area, length, &[]),
                nonconvex: lo < 0.0 && hi > 0.0,
            })
        }
    }
}

pub fn enclosed_volume(sample: &SurfaceSample) -> Result<f64> {
    let region = boundary_region(sample)?;
    Ok(volume_with(sample, &region))
}

fn volume_with(sample: &SurfaceSample, region: &BoundaryRegion) -> f64 {
    let flux = sample.integrate(|i| crate::geometry::dot(sample.x(i), sample.nu(i)));
    (region.area + flux) / (sample.n() + 1) as f64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuermassVector {
    pub w: Vec<f64>,
    pub area: f64,
    pub boundary_length: f64,
    pub boundary_area: f64,
    pub ws: Vec<f64>,
    pub theta: f64,
    pub n: usize,
    pub sign: BoundarySign,
}

pub fn quermass_vector_with(sample: &SurfaceSample, sign: BoundarySign) -> Result<QuermassVector> {
    let n = sample.n();
    let region = boundary_region(sample)?;
    let volume = volume_with(sample, &region);
    let int_h: Vec<f64> = (0..n).map(|k| sample.integrate(|i| sample.h(k, i))).collect();
    let w = assemble_theta(n, sample.theta, volume, &int_h, &region.ws, sign);
    Ok(QuermassVector {
        w,
        area: int_h[0],
        boundary_length: region.length,
        boundary_area: region.area,
        ws: region.ws,
        theta: sample.theta,
        n,
        sign,
    })
}

pub fn quermass_vector(sample: &SurfaceSample) -> Result<QuermassVector> {
    quermass_vector_with(sample, resolved_sign())
}

pub fn quermass_theta(sample: &SurfaceSample, k: usize) -> Result<f64> {
    if k > sample.n() {
        return Err(CapflowError::invalid(format!("k = {k} exceeds n = {}", sample.n())));
    }
    Ok(quermass_vector(sample)?.w[k])
}

/// The free-boundary assembly on a sample, for comparison with the general one.
pub fn quermass_free_boundary(sample: &SurfaceSample, sign: BoundarySign) -> Result<Vec<f64>> {
    let n = sample.n();
    let region = boundary_region(sample)?;
    let volume = volume_with(sample, &region);
    let int_h: Vec<f64> = (0..n).map(|k| sample.integrate(|i| sample.h(k, i))).collect();
    Ok(assemble_free_boundary(n, volume, &int_h, &region.ws, sign))
}

/// `int H_{k-1} <x + cos(theta) nu, e> dA - int H_k <X_e, nu> dA`.
pub fn minkowski_residual(sample: &SurfaceSample, k: usize, theta: f64) -> Result<f64> {
    let n = sample.n();
    if k == 0 || k > n {
        return Err(CapflowError::invalid(format!("Minkowski index k = {k} outside [1, {n}]")));
    }
    let ct = theta.cos();
    let lhs = sample.integrate(|i| sample.h(k - 1, i) * (sample.x(i)[n] + ct * sample.nu(i)[n]));
    let rhs = sample.integrate(|i| sample.h(k, i) * sample.xe_nu[i]);
    Ok(lhs - rhs)
}

/// Outcome of the variational test for one sign convention.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SignTrial {
    pub sign: BoundarySign,
    /// Largest relative mismatch between the finite-difference derivative
    /// along the cap family and the variational right-hand side.
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SignResolution {
    pub trials: Vec<SignTrial>,
    /// The unique passing convention, if exactly one passed.
    pub chosen: Option<BoundarySign>,
}

/// Relative tolerance of the variational test.
pub const VARIATIONAL_TOL: f64 = 0.01;

/// Runs the variational test for both conventions over dimensions 2 to 4,
/// several contact angles and radii, and every `k`.
pub fn resolve_sign() -> SignResolution {
    let thetas = [0.4, std::f64::consts::PI / 3.0, 1.2, FRAC_PI_2];
    let radii = [0.5, 1.0, 2.0];
    let trials: Vec<SignTrial> = [BoundarySign::Alternating, BoundarySign::Reversed]
        .into_iter()
        .map(|sign| {
            let mut worst: f64 = 0.0;
            for n in 2..=4 {
                for &theta in &thetas {
                    for &r in &radii {
                        let h = 1e-4 * r;
                        let eval = |rr: f64| {
                            CapParams::new(theta, rr, n)
                                .and_then(|p| cap_quermass_all_with(&p, sign))
                        };
                        let (Ok(fp), Ok(fm), Ok(p)) = (eval(r + h), eval(r - h), CapParams::new(theta, r, n)) else {
                            worst = f64::INFINITY;
                            continue;
                        };
                        for k in 0..=n {
                            let fd = (fp[k] - fm[k]) / (2.0 * h);
                            let rhs = match cap_variation_integral(&p, k) {
                                Ok(v) => (n + 1 - k) as f64 / (n + 1) as f64 * v,
                                Err(_) => f64::NAN,
                            };
                            let err = ((fd - rhs) / rhs).abs();
                            worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
                        }
                    }
                }
            }
            SignTrial {
                sign,
                max_rel_error: worst,
                passed: worst < VARIATIONAL_TOL,
            }
        })
        .collect();
    let passing: Vec<BoundarySign> = trials.iter().filter(|t| t.passed).map(|t| t.sign).collect();
    SignResolution {
        chosen: (passing.len() == 1).then(|| passing[0]),
        trials,
    }
}

/// The memoized outcome of [`resolve_sign`].
pub fn sign_resolution() -> &'static SignResolution {
    static RESOLUTION: OnceLock<SignResolution> = OnceLock::new();
    RESOLUTION.get_or_init(resolve_sign)
}

/// The convention used by every assembly. Falls back to
/// [`BoundarySign::Alternating`] if the test is inconclusive; callers that
/// care inspect [`sign_resolution`].
pub fn resolved_sign() -> BoundarySign {
    sign_resolution().chosen.unwrap_or(BoundarySign::Alternating)
}
