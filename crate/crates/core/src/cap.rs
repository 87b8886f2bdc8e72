//! Spherical caps `C_{theta,r}(e)` and the flat ball `C_{theta,inf}(e)`.
//!
//! A cap of radius `r` is the part inside the unit ball of the sphere of
//! radius `r` about `c e`, `c = sqrt(r^2 + 2 r cos(theta) + 1)`. The enclosed
//! region is the lens on the `e` side. Its boundary is the latitude of
//! angular radius `alpha` about `e`, and the cap itself is the segment of
//! the `r`-sphere of angular radius `phi_r` about `-e`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{CapflowError, Result};
use crate::quad::sin_power_integral;
use crate::quermass::{assemble_theta, resolved_sign, spherical_quermass_latitude, BoundarySign};
use crate::surface::{GraphState, GridMode, HemisphereGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapParams {
    pub theta: f64,
    /// Cap radius; `f64::INFINITY` selects the flat ball.
    pub r: f64,
    pub n: usize,
}

impl CapParams {
    pub fn new(theta: f64, r: f64, n: usize) -> Result<Self> {
        validate_theta(theta)?;
        if n < 2 {
            return Err(CapflowError::invalid(format!("dimension n = {n} must be >= 2")));
        }
        if !(r > 0.0) {
            return Err(CapflowError::invalid(format!("cap radius r = {r} must be positive")));
        }
        Ok(Self { theta, r, n })
    }

    pub fn flat(theta: f64, n: usize) -> Result<Self> {
        Self::new(theta, f64::INFINITY, n)
    }

    pub fn is_flat(&self) -> bool {
        self.r.is_infinite()
    }

    /// Angular radius of the boundary latitude about `e`.
    pub fn boundary_angle(&self) -> f64 {
        if self.is_flat() {
            self.theta
        } else {
            let (s, c) = self.theta.sin_cos();
            (self.r * s).atan2(1.0 + self.r * c)
        }
    }

    /// Angular radius about `-e` of the cap as a segment of its own sphere.
    pub fn segment_angle(&self) -> f64 {
        let (s, c) = self.theta.sin_cos();
        s.atan2(self.r + c)
    }

    /// Sphere `|y - m e| = R` in the half-space that the cap is mapped to.
    /// Returns `(m, R)`.
    pub fn halfspace_sphere(&self) -> (f64, f64) {
        let ct = self.theta.cos();
        if self.is_flat() {
            return (ct / (1.0 - ct), 1.0 / (1.0 - ct));
        }
        let r = self.r;
        let c = (r * r + 2.0 * r * ct + 1.0).sqrt();
        let c_minus_r = (2.0 * r * ct + 1.0) / (c + r);
        let y1 = (1.0 + c_minus_r) / (1.0 - c_minus_r);
        let y2 = -(1.0 + c + r) / (c + r - 1.0);
        (0.5 * (y1 + y2), 0.5 * (y1 - y2))
    }

    /// Radial profile `u(beta) = log rho` of the mapped cap, with its first
    /// two derivatives.
    pub fn profile(&self, beta: f64) -> (f64, f64, f64) {
        let (m, big_r) = self.halfspace_sphere();
        let (sb, cb) = beta.sin_cos();
        let w = (big_r * big_r - m * m * sb * sb).sqrt();
        let w1 = -m * m * sb * cb / w;
        let w2 = -m * m * (cb * cb - sb * sb) / w - w1 * w1 / w;
        let rho = m * cb + w;
        let rho1 = -m * sb + w1;
        let rho2 = -m * cb + w2;
        let u1 = rho1 / rho;
        (rho.ln(), u1, rho2 / rho - u1 * u1)
    }
}

/// `cos(theta)`, exactly zero at `theta = pi/2`.
pub fn cos_theta(theta: f64) -> f64 {
    if theta == std::f64::consts::FRAC_PI_2 {
        0.0
    } else {
        theta.cos()
    }
}

/// Contact angles in (0, pi/2] are accepted.
pub fn validate_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2 + 1e-15 {
        Ok(())
    } else {
        Err(CapflowError::ObliquenessViolated(theta))
    }
}

pub fn cap_center(params: &CapParams) -> Result<f64> {
    if params.is_flat() {
        return Err(CapflowError::InfiniteRadius);
    }
    let r = params.r;
    Ok((r * r + 2.0 * r * params.theta.cos() + 1.0).sqrt())
}

/// The mapped cap as a graph state on `grid`. Full 2-D grids get the same
/// value on every azimuth.
pub fn cap_graph(params: &CapParams, grid: &HemisphereGrid) -> GraphState {
    let u: Vec<f64> = match grid.mode {
        GridMode::Axisym => (0..grid.n_beta).map(|i| params.profile(grid.beta(i)).0).collect(),
        GridMode::Full2d => (0..grid.n_beta)
            .flat_map(|i| std::iter::repeat_n(params.profile(grid.beta(i)).0, grid.n_xi))
            .collect(),
    };
    GraphState::new(u, params.theta)
}

/// `|S^m|`, the area of the unit m-sphere.
pub fn sphere_area(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * sphere_area(m - 2),
    }
}

/// Volume of the unit n-ball.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n - 1) / n as f64
}

/// Geometric building blocks of a cap: volume, area, boundary angle.
#[derive(Clone, Copy, Debug)]
pub struct CapMeasures {
    pub volume: f64,
    pub area: f64,
    pub alpha: f64,
}

pub fn cap_measures(params: &CapParams) -> Result<CapMeasures> {
    let n = params.n;
    let alpha = params.boundary_angle();
    let (volume, area) = if params.is_flat() {
        let st = params.theta.sin();
        (
            ball_volume(n) * segment_integral(n + 1, alpha)?,
            ball_volume(n) * st.powi(n as i32),
        )
    } else {
        let r = params.r;
        let phi = params.segment_angle();
        let seg = |radius: f64, ang: f64| -> Result<f64> {
            Ok(ball_volume(n) * radius.powi(n as i32 + 1) * segment_integral(n + 1, ang)?)
        };
        let v = seg(1.0, alpha)? + seg(r, phi)?;
        let a = sphere_area(n - 1) * r.powi(n as i32) * segment_integral(n - 1, phi)?;
        (v, a)
    };
    Ok(CapMeasures { volume, area, alpha })
}

/// `int_0^phi sin^m`. Closed forms for the exponents that occur when n = 2.
fn segment_integral(m: usize, phi: f64) -> Result<f64> {
    let half = (0.5 * phi).sin();
    let one_minus_cos = 2.0 * half * half;
    match m {
        1 => Ok(one_minus_cos),
        3 => Ok(one_minus_cos * one_minus_cos * (2.0 + phi.cos()) / 3.0),
        _ => sin_power_integral(m as u32, phi),
    }
}

/// `f_0(r), ..., f_n(r)` under the given boundary sign convention.
pub fn cap_quermass_all_with(params: &CapParams, sign: BoundarySign) -> Result<Vec<f64>> {
    let n = params.n;
    let m = cap_measures(params)?;
    let int_h: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                m.area
            } else if params.is_flat() {
                0.0
            } else {
                m.area / params.r.powi(k as i32)
            }
        })
        .collect();
    let ws = spherical_quermass_latitude(n, m.alpha)?;
    Ok(assemble_theta(n, params.theta, m.volume, &int_h, &ws, sign))
}

pub fn cap_quermass_all(params: &CapParams) -> Result<Vec<f64>> {
    cap_quermass_all_with(params, resolved_sign())
}

pub fn cap_quermass(params: &CapParams, k: usize) -> Result<f64> {
    if k > params.n {
        return Err(CapflowError::invalid(format!("k = {k} exceeds n = {}", params.n)));
    }
    Ok(cap_quermass_all(params)?[k])
}

/// `int H_k f dA` for the radial variation `f = <d/dr x, nu>` of the cap family.
pub fn cap_variation_integral(params: &CapParams, k: usize) -> Result<f64> {
    let n = params.n;
    let r = params.r;
    let ct = params.theta.cos();
    let dc = (r + ct) / cap_center(params)?;
    let phi = params.segment_angle();
    let a = sin_power_integral(n as u32 - 1, phi)?;
    let b = crate::quad::integrate(
        |t| t.cos() * t.sin().powi(n as i32 - 1),
        0.0,
        phi,
        1e-15,
    )?;
    Ok(r.powi(n as i32 - k as i32) * sphere_area(n - 1) * (a - dc * b))
}

/// Tabulated profile functions with monotone cubic interpolation in
/// `s = r / (1 + r)`, used to seed the inverse maps.
#[derive(Clone, Debug)]
pub struct CapProfileTable {
    pub theta: f64,
    pub n: usize,
    pub radii: Vec<f64>,
    /// `values[i][k] = f_k(radii[i])`.
    pub values: Vec<Vec<f64>>,
    s: Vec<f64>,
    /// Column-major copy including the endpoints `s = 0` and `s = 1`.
    columns: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

const TABLE_POINTS: usize = 200;

impl CapProfileTable {
    pub fn build(theta: f64, n: usize) -> Result<Self> {
        validate_theta(theta)?;
        let mut s = vec![0.0];
        let mut radii = Vec::with_capacity(TABLE_POINTS);
        let mut values = Vec::with_capacity(TABLE_POINTS);
        for i in 1..=TABLE_POINTS {
            let si = i as f64 / (TABLE_POINTS + 1) as f64;
            let r = si / (1.0 - si);
            s.push(si);
            radii.push(r);
            values.push(cap_quermass_all(&CapParams::new(theta, r, n)?)?);
        }
        s.push(1.0);
        let flat = cap_quermass_all(&CapParams::flat(theta, n)?)?;
        let columns: Vec<Vec<f64>> = (0..=n)
            .map(|k| {
                std::iter::once(0.0)
                    .chain(values.iter().map(|v| v[k]))
                    .chain(std::iter::once(flat[k]))
                    .collect()
            })
            .collect();
        let slopes = columns.iter().map(|col| monotone_slopes(&s, col)).collect();
        Ok(Self {
            theta,
            n,
            radii,
            values,
            s,
            columns,
            slopes,
        })
    }

    /// Shared table for `(theta, n)`, built on first use.
    pub fn cached(theta: f64, n: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<CapProfileTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (theta.to_bits(), n);
        if let Some(t) = cache.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let table = Arc::new(Self::build(theta, n)?);
        cache.lock().unwrap().insert(key, table.clone());
        Ok(table)
    }

    /// `f_k(0+)` and `f_k(inf)`.
    pub fn range(&self, k: usize) -> (f64, f64) {
        let col = &self.columns[k];
        (col[0], col[col.len() - 1])
    }

    /// Interpolated `f_k` at `s = r / (1 + r)`.
    pub fn interpolate(&self, k: usize, s: f64) -> f64 {
        let i = match self.s.partition_point(|&x| x <= s) {
            0 => 0,
            p => (p - 1).min(self.s.len() - 2),
        };
        hermite(&self.s, &self.columns[k], &self.slopes[k], i, s)
    }

    /// Table bracket `(s_lo, s_hi)` containing the preimage of `value`.
    fn bracket(&self, k: usize, value: f64) -> (f64, f64) {
        let col = &self.columns[k];
        let p = col.partition_point(|&x| x < value).clamp(1, col.len() - 1);
        (self.s[p - 1], self.s[p])
    }
}

fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = x.len();
    let d: Vec<f64> = (0..m - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut t = vec![0.0; m];
    t[0] = d[0];
    t[m - 1] = d[m - 2];
    for i in 1..m - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            t[i] = 0.0;
        } else {
            let w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
            let w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
            t[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    t
}

fn hermite(x: &[f64], y: &[f64], t: &[f64], i: usize, s: f64) -> f64 {
    let h = x[i + 1] - x[i];
    let q = (s - x[i]) / h;
    let q2 = q * q;
    let q3 = q2 * q;
    (2.0 * q3 - 3.0 * q2 + 1.0) * y[i]
        + (q3 - 2.0 * q2 + q) * h * t[i]
        + (-2.0 * q3 + 3.0 * q2) * y[i + 1]
        + (q3 - q2) * h * t[i + 1]
}

/// The radius `r` with `f_k(r) = value`.
pub fn cap_radius_from_quermass(theta: f64, n: usize, k: usize, value: f64) -> Result<f64> {
    if k > n {
        return Err(CapflowError::invalid(format!("k = {k} exceeds n = {n}")));
    }
    let table = CapProfileTable::cached(theta, n)?;
    let (lo, hi) = table.range(k);
    if !(value > lo && value < hi) {
        return Err(CapflowError::OutOfRange { value, lo, hi });
    }
    let f = |s: f64| -> Result<f64> {
        if s >= 1.0 {
            return Ok(hi - value);
        }
        let r = s / (1.0 - s);
        Ok(cap_quermass(&CapParams::new(theta, r, n)?, k)? - value)
    };
    let (mut a, mut b) = table.bracket(k, value);
    let mut fa = if a == 0.0 { lo - value } else { f(a)? };
    let mut fb = f(b)?;
    let tol = 1e-10 * value.abs();
    // Illinois variant of regula falsi, falling back to bisection when slow.
    let mut side = 0;
    for iter in 0..200 {
        let mut s = if iter % 4 == 3 {
            0.5 * (a + b)
        } else {
            (a * fb - b * fa) / (fb - fa)
        };
        if !(s > a && s < b) {
            s = 0.5 * (a + b);
        }
        let fs = f(s)?;
        if fs.abs() < tol || (b - a) < 1e-17 {
            return Ok(s / (1.0 - s));
        }
        if fs.signum() == fb.signum() {
            b = s;
            fb = fs;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = s;
            fa = fs;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    let s = 0.5 * (a + b);
    Ok(s / (1.0 - s))
}

/// Radii `r1 <= r2` of the cap shell bracketing a graph: `u_{r2} <= u <= u_{r1}`
/// nodewise, with `r1` the largest inscribed and `r2` the smallest
/// circumscribed cap. `r2` is infinite when only the flat ball bounds the
/// graph from below.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapShell {
    pub r1: f64,
    pub r2: f64,
}

fn radius_of(s: f64) -> f64 {
    if s >= 1.0 {
        f64::INFINITY
    } else {
        s / (1.0 - s)
    }
}

pub fn cap_shell(state: &GraphState, grid: &HemisphereGrid) -> Result<CapShell> {
    state.check(grid)?;
    let (theta, n) = (state.theta, grid.n);
    // per latitude: the largest and smallest value of u
    let rows: Vec<(f64, f64, f64)> = (0..grid.n_beta)
        .map(|i| {
            let m = state.meridian_extremes(grid, i);
            (grid.beta(i), m.0, m.1)
        })
        .collect();
    let profile = |s: f64, beta: f64| -> Result<f64> {
        let p = CapParams::new(theta, radius_of(s), n)?;
        Ok(p.profile(beta).0)
    };
    let upper = |s: f64| -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for &(b, _, hi) in &rows {
            worst = worst.max(hi - profile(s, b)?);
        }
        Ok(worst)
    };
    let lower = |s: f64| -> Result<f64> {
        let mut worst = f64::INFINITY;
        for &(b, lo, _) in &rows {
            worst = worst.min(lo - profile(s, b)?);
        }
        Ok(worst)
    };
    if upper(1.0)? <= 0.0 {
        return Err(CapflowError::ShellViolation(
            "graph lies on the far side of the flat ball; no inscribed cap".into(),
        ));
    }
    let lower_flat = lower(1.0)?;
    if lower_flat < 0.0 {
        return Err(CapflowError::ShellViolation(
            "graph crosses the flat ball; no circumscribed cap".into(),
        ));
    }
    let bisect = |g: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64| -> Result<f64> {
        // g(a) <= 0 < g(b)
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if g(m)? <= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(a)
    };
    let mut lo = 0.5;
    while upper(lo)? > 0.0 {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(CapflowError::ShellViolation("no inscribed cap found".into()));
        }
    }
    let s1 = bisect(&upper, lo, 1.0)?;
    let r2 = if lower_flat == 0.0 {
        f64::INFINITY
    } else {
        let mut lo = 0.5;
        while lower(lo)? >= 0.0 {
            lo *= 0.5;
            if lo < 1e-12 {
                return Err(CapflowError::ShellViolation("no circumscribed cap found".into()));
            }
        }
        // smallest s with lower(s) >= 0
        let neg = |s: f64| -> Result<f64> { Ok(-lower(s)?) };
        let mut a = lo;
        let mut b = 1.0;
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if neg(m)? > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        radius_of(b)
    };
    let r1 = radius_of(s1);
    // an exact cap may bisect to a marginally inverted pair
    let r1 = if r1 > r2 { r2 } else { r1 };
    Ok(CapShell { r1, r2 })
}
