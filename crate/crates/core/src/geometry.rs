//! Coordinates in the unit ball, the conformal Killing field `X_e`, and the
//! Moebius map to the upper half-space together with its polar coordinates.
//!
//! Internally the reference direction `e` is always the last coordinate
//! axis. A user-supplied direction is brought there by [`Direction::to_axis`],
//! a proper rotation applied once at ingestion.

use std::f64::consts::FRAC_PI_2;

use crate::error::{CapflowError, Result};

/// Tolerance for algebraic identities of the coordinate maps.
pub const TOL_GEOM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BallPoint {
    pub coords: Vec<f64>,
}

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm = norm(&coords);
        if coords.len() < 3 {
            return Err(CapflowError::invalid("ball points need dimension n + 1 >= 3"));
        }
        if !(norm <= 1.0 + TOL_GEOM) {
            return Err(CapflowError::invalid(format!(
                "point of norm {norm} lies outside the closed unit ball"
            )));
        }
        Ok(Self { coords })
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Height along the reference axis, `<x, e>`.
    pub fn height(&self) -> f64 {
        *self.coords.last().unwrap()
    }

    /// `|x'|`, distance from the reference axis.
    pub fn axial_radius(&self) -> f64 {
        norm(&self.coords[..self.dim() - 1])
    }
}

/// Polar coordinates `(rho, beta, xi)` of a point of the closed upper half-space.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpacePolar {
    pub rho: f64,
    /// Angle from the vertical axis, in `[0, pi/2]`.
    pub beta: f64,
    /// Unit vector of the (n-1)-sphere; arbitrary when `sin(beta) rho = 0`.
    pub xi: Vec<f64>,
}

impl HalfSpacePolar {
    pub fn new(rho: f64, beta: f64, xi: Vec<f64>) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(CapflowError::invalid(format!("rho = {rho} must be finite and >= 0")));
        }
        if !(-TOL_GEOM..=FRAC_PI_2 + TOL_GEOM).contains(&beta) {
            return Err(CapflowError::invalid(format!("beta = {beta} outside [0, pi/2]")));
        }
        let m = norm(&xi);
        if (m - 1.0).abs() > 1e-9 {
            return Err(CapflowError::invalid("xi must be a unit vector"));
        }
        Ok(Self { rho, beta, xi })
    }

    pub fn y_vertical(&self) -> f64 {
        self.rho * self.beta.cos()
    }

    pub fn y_horizontal(&self) -> f64 {
        self.rho * self.beta.sin()
    }
}

/// Unit reference direction `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    e: Vec<f64>,
}

impl Direction {
    pub fn new(e: Vec<f64>) -> Result<Self> {
        let m = norm(&e);
        if e.len() < 3 || (m - 1.0).abs() > TOL_GEOM.max(1e-9) {
            return Err(CapflowError::invalid(format!(
                "direction must be a unit vector of dimension >= 3 (|e| = {m})"
            )));
        }
        Ok(Self { e })
    }

    /// The last coordinate axis of `R^{dim}`.
    pub fn axis(dim: usize) -> Self {
        let mut e = vec![0.0; dim];
        e[dim - 1] = 1.0;
        Self { e }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.e
    }

    /// A proper rotation `R` with `R e = e_{n+1}`, returned row-major.
    ///
    /// Built from two reflections: the Householder map swapping `e` and the
    /// axis, followed by a reflection fixing the axis, so that det R = +1.
    pub fn to_axis(&self) -> Vec<Vec<f64>> {
        let d = self.e.len();
        let mut r = identity(d);
        let mut w = self.e.clone();
        w[d - 1] -= 1.0;
        let wn = dot(&w, &w);
        if wn > 1e-30 {
            for i in 0..d {
                for j in 0..d {
                    r[i][j] -= 2.0 * w[i] * w[j] / wn;
                }
            }
            // Second reflection flips the first coordinate, which is orthogonal to the axis.
            for v in r[0].iter_mut() {
                *v = -*v;
            }
        }
        r
    }

    /// Applies [`Self::to_axis`] to a point given in the user frame.
    pub fn ingest(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.to_axis(), x)
    }

    /// Maps a canonical-frame point back to the user frame.
    pub fn egress(&self, x: &[f64]) -> Vec<f64> {
        let r = self.to_axis();
        let d = x.len();
        (0..d).map(|j| (0..d).map(|i| r[i][j] * x[i]).sum()).collect()
    }
}

/// `X_e = <x, e> x - (|x|^2 + 1) e / 2`.
pub fn xe_field(x: &BallPoint, e: &Direction) -> Vec<f64> {
    xe_field_raw(&x.coords, e.as_slice())
}

pub(crate) fn xe_field_raw(x: &[f64], e: &[f64]) -> Vec<f64> {
    let xe = dot(x, e);
    let half = 0.5 * (dot(x, x) + 1.0);
    x.iter().zip(e).map(|(xi, ei)| xe * xi - half * ei).collect()
}

/// Cartesian image of `x` under the Moebius map.
pub fn moebius(x: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    let h = x[d - 1];
    let r2: f64 = x[..d - 1].iter().map(|v| v * v).sum();
    let denom = r2 + (h - 1.0) * (h - 1.0);
    if denom.sqrt() < TOL_GEOM {
        return Err(CapflowError::SingularPoint(x.to_vec()));
    }
    let mut y: Vec<f64> = x[..d - 1].iter().map(|v| 2.0 * v / denom).collect();
    y.push((1.0 - r2 - h * h) / denom);
    Ok(y)
}

/// Inverse of [`moebius`], defined on all of `R^{n+1}` minus `-e`'s preimage at infinity.
pub fn moebius_inverse(y: &[f64]) -> Vec<f64> {
    let d = y.len();
    let yh = y[d - 1];
    let r2: f64 = y[..d - 1].iter().map(|v| v * v).sum();
    let denom = r2 + (yh + 1.0) * (yh + 1.0);
    let mut x: Vec<f64> = y[..d - 1].iter().map(|v| 2.0 * v / denom).collect();
    x.push((r2 + yh * yh - 1.0) / denom);
    x
}

pub fn to_halfspace(x: &BallPoint) -> Result<HalfSpacePolar> {
    let y = moebius(&x.coords)?;
    let d = y.len();
    let yh = y[d - 1].max(0.0);
    let horiz = norm(&y[..d - 1]);
    let rho = (horiz * horiz + yh * yh).sqrt();
    let beta = horiz.atan2(yh);
    let xi = if horiz > 0.0 {
        y[..d - 1].iter().map(|v| v / horiz).collect()
    } else {
        let mut v = vec![0.0; d - 1];
        v[0] = 1.0;
        v
    };
    Ok(HalfSpacePolar { rho, beta, xi })
}

pub fn to_ball(p: &HalfSpacePolar) -> BallPoint {
    let (s, c) = p.beta.sin_cos();
    let mut y: Vec<f64> = p.xi.iter().map(|v| p.rho * s * v).collect();
    y.push(p.rho * c);
    BallPoint {
        coords: moebius_inverse(&y),
    }
}

/// `e^w = 2 / (rho^2 + 2 rho cos(beta) + 1)`; the ball metric is `e^{2w}` times the pulled-back flat one.
pub fn conformal_factor(rho: f64, beta: f64) -> f64 {
    2.0 / (rho * rho + 2.0 * rho * beta.cos() + 1.0)
}

/// Meridian-plane coordinates `(|x'|, x_{n+1})` of the ball point over the
/// polar half-space point `(e^u, beta)`.
pub(crate) fn meridian_point<const K: usize>(
    u: crate::jet::Jet<K>,
    sin_b: crate::jet::Jet<K>,
    cos_b: crate::jet::Jet<K>,
) -> (crate::jet::Jet<K>, crate::jet::Jet<K>) {
    let rho = u.exp();
    let denom = rho * rho + rho * cos_b * 2.0 + 1.0;
    let inv = denom.recip();
    let s = rho * sin_b * inv * 2.0;
    let z = (rho * rho - 1.0) * inv;
    (s, z)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e3() -> Direction {
        Direction::axis(3)
    }

    #[test]
    fn xe_at_origin_and_poles() {
        let e = e3();
        let v = xe_field(&BallPoint::new(vec![0.0, 0.0, 0.0]).unwrap(), &e);
        assert_eq!(v, vec![0.0, 0.0, -0.5]);
        for s in [1.0, -1.0] {
            let v = xe_field(&BallPoint::new(vec![0.0, 0.0, s]).unwrap(), &e);
            assert!(norm(&v) < 1e-15);
        }
    }

    #[test]
    fn halfspace_examples() {
        let p = to_halfspace(&BallPoint::new(vec![0.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!((p.rho - 1.0).abs() < 1e-15 && p.beta.abs() < 1e-15);
        let p = to_halfspace(&BallPoint::new(vec![0.0, 0.0, -1.0]).unwrap()).unwrap();
        assert!(p.rho.abs() < 1e-15);
        let p = to_halfspace(&BallPoint::new(vec![0.3, -0.4, 0.0]).unwrap()).unwrap();
        assert!((p.rho - 1.0).abs() < 1e-14);
        assert!(matches!(
            to_halfspace(&BallPoint::new(vec![0.0, 0.0, 1.0]).unwrap()),
            Err(CapflowError::SingularPoint(_))
        ));
    }

    #[test]
    fn to_ball_examples() {
        let x = to_ball(&HalfSpacePolar::new(1.0, 0.0, vec![1.0, 0.0]).unwrap());
        assert!(norm(&x.coords) < 1e-15);
        let x = to_ball(&HalfSpacePolar::new(0.0, 0.3, vec![0.0, 1.0]).unwrap());
        assert!((x.coords[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn conformal_factor_examples() {
        assert!((conformal_factor(1.0, FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert!((conformal_factor(1.0, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rotation_to_axis_is_proper_and_maps_e() {
        let e = Direction::new(vec![0.6, 0.0, 0.8]).unwrap();
        let r = e.to_axis();
        let img = mat_vec(&r, e.as_slice());
        assert!((img[2] - 1.0).abs() < 1e-14 && img[0].abs() < 1e-14 && img[1].abs() < 1e-14);
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        assert!((det - 1.0).abs() < 1e-14);
        let x = vec![0.1, 0.2, 0.3];
        let back = e.egress(&e.ingest(&x));
        assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    fn random_ball_point(dir: [f64; 3], radius: f64) -> Option<BallPoint> {
        let m = norm(&dir);
        if m < 1e-3 {
            return None;
        }
        let x: Vec<f64> = dir.iter().map(|v| v / m * radius).collect();
        let dist_e = ((x[0] * x[0]) + (x[1] * x[1]) + (x[2] - 1.0) * (x[2] - 1.0)).sqrt();
        (dist_e > 1e-3).then(|| BallPoint::new(x).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn round_trip_through_half_space(
            dir in prop::array::uniform3(-1.0f64..1.0),
            radius in 0.0f64..=1.0,
        ) {
            if let Some(x) = random_ball_point(dir, radius) {
                let back = to_ball(&to_halfspace(&x).unwrap());
                let err = x.coords.iter().zip(&back.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                prop_assert!(err < 10.0 * TOL_GEOM, "err = {err}");
            }
        }
    }

    proptest! {
        #[test]
        fn boundary_maps_to_equator(dir in prop::array::uniform3(-1.0f64..1.0)) {
            if let Some(x) = random_ball_point(dir, 1.0) {
                let p = to_halfspace(&x).unwrap();
                prop_assert!((p.beta - FRAC_PI_2).abs() < 1e-9 || p.y_vertical().abs() < TOL_GEOM);
                let v = xe_field(&x, &e3());
                prop_assert!(dot(&v, &x.coords).abs() < 1e-15);
            }
        }

        #[test]
        fn interior_maps_strictly_above_boundary(
            dir in prop::array::uniform3(-1.0f64..1.0),
            radius in 0.0f64..0.999,
        ) {
            if let Some(x) = random_ball_point(dir, radius) {
                let y = moebius(&x.coords).unwrap();
                prop_assert!(y[2] > 0.0);
            }
        }

        #[test]
        fn conformal_factor_matches_ball_side(
            dir in prop::array::uniform3(-1.0f64..1.0),
            radius in 0.0f64..=1.0,
        ) {
            if let Some(x) = random_ball_point(dir, radius) {
                let p = to_halfspace(&x).unwrap();
                let ball_side = (x.axial_radius().powi(2) + (x.height() - 1.0).powi(2)) / 2.0;
                let prod = conformal_factor(p.rho, p.beta) / ball_side;
                prop_assert!((prod - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn moebius_jacobian_is_conformal(
            dir in prop::array::uniform3(-1.0f64..1.0),
            radius in 0.0f64..0.95,
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            if let Some(x) = random_ball_point(dir, radius) {
                // two orthonormal directions
                let a = [angle.cos(), angle.sin(), 0.3];
                let an = norm(&a);
                let t1: Vec<f64> = a.iter().map(|v| v / an).collect();
                let mut t2 = vec![-t1[1], t1[0], 0.0];
                let c = dot(&t2, &t1);
                for i in 0..3 { t2[i] -= c * t1[i]; }
                let n2 = norm(&t2);
                let t2: Vec<f64> = t2.iter().map(|v| v / n2).collect();
                let step = 1e-5;
                let jac = |t: &[f64]| -> Vec<f64> {
                    let p: Vec<f64> = x.coords.iter().zip(t).map(|(xi, ti)| xi + step * ti).collect();
                    let m: Vec<f64> = x.coords.iter().zip(t).map(|(xi, ti)| xi - step * ti).collect();
                    let yp = moebius(&p).unwrap();
                    let ym = moebius(&m).unwrap();
                    yp.iter().zip(&ym).map(|(a, b)| (a - b) / (2.0 * step)).collect()
                };
                let j1 = jac(&t1);
                let j2 = jac(&t2);
                let l1 = norm(&j1);
                let l2 = norm(&j2);
                prop_assert!((l1 - l2).abs() / l1 < 1e-6);
                prop_assert!(dot(&j1, &j2).abs() / (l1 * l2) < 1e-6);
            }
        }
    }
}
