use crate::geometry::dot;

use super::{GridMode, SurfaceSample};

/// Boundary geometry at one equator node. Tangential quantities along
/// `dpartial Sigma` are `(n-1) x (n-1)` matrices stored row-major.
#[derive(Clone, Debug)]
pub struct BoundaryNode {
    pub node: usize,
    /// Outward conormal of `dSigma` in `Sigma`.
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    /// Outward normal of `dSigma` in the unit sphere.
    pub nu_bar: Vec<f64>,
    /// Position on the unit sphere, which is also its outward normal.
    pub n_bar: Vec<f64>,
    pub h_mumu: f64,
    pub h_mu_alpha: Vec<f64>,
    pub h_alpha: Vec<f64>,
    /// Second fundamental form of `dSigma` in the unit sphere.
    pub hhat: Vec<f64>,
    /// Second fundamental form of `dSigma` in `Sigma`.
    pub htilde: Vec<f64>,
    /// `nabla_mu h_{alpha beta}`, available on axisymmetric grids.
    pub dmu_h_alpha: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct BoundaryFrame {
    pub theta: f64,
    pub n: usize,
    pub nodes: Vec<BoundaryNode>,
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let m = dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / m).collect()
}

fn max_over(frame: &BoundaryFrame, f: impl Fn(&BoundaryNode) -> f64) -> f64 {
    frame.nodes.iter().map(f).fold(0.0, f64::max)
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

impl BoundaryFrame {
    /// `max |<N_bar, nu> + cos(theta)|`.
    pub fn angle_residual(&self) -> f64 {
        let c = self.theta.cos();
        max_over(self, |b| (dot(&b.n_bar, &b.nu) + c).abs())
    }

    /// Deviation of `N_bar` and `nu_bar` from their expressions in `(mu, nu)`.
    pub fn frame_residual(&self) -> f64 {
        let (s, c) = self.theta.sin_cos();
        max_over(self, |b| {
            (0..b.mu.len())
                .map(|i| {
                    let e1 = b.n_bar[i] - (s * b.mu[i] - c * b.nu[i]);
                    let e2 = b.nu_bar[i] - (c * b.mu[i] + s * b.nu[i]);
                    e1.abs().max(e2.abs())
                })
                .fold(0.0, f64::max)
        })
    }

    /// `max |h(mu, e_alpha)|`.
    pub fn principal_residual(&self) -> f64 {
        max_over(self, |b| b.h_mu_alpha.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    /// `max |h_ab - (sin(theta) hhat_ab - cos(theta) delta_ab)|`.
    pub fn tangential_residual(&self) -> f64 {
        let (s, c) = self.theta.sin_cos();
        let m = self.n - 1;
        max_over(self, |b| {
            (0..m * m)
                .map(|k| (b.h_alpha[k] - (s * b.hhat[k] - c * delta(k / m, k % m))).abs())
                .fold(0.0, f64::max)
        })
    }

    /// `max |htilde_ab - (cot(theta) h_ab + delta_ab / sin(theta))|`.
    pub fn conormal_residual(&self) -> f64 {
        let (s, c) = self.theta.sin_cos();
        let m = self.n - 1;
        max_over(self, |b| {
            (0..m * m)
                .map(|k| (b.htilde[k] - (c / s * b.h_alpha[k] + delta(k / m, k % m) / s)).abs())
                .fold(0.0, f64::max)
        })
    }

    /// `max |nabla_mu h_ab - htilde_bg (h_mumu delta_ag - h_ag)|`, when available.
    pub fn codazzi_residual(&self) -> Option<f64> {
        let m = self.n - 1;
        let mut worst: f64 = 0.0;
        for b in &self.nodes {
            let d = b.dmu_h_alpha.as_ref()?;
            for a in 0..m {
                for bb in 0..m {
                    let rhs: f64 = (0..m)
                        .map(|g| {
                            b.htilde[bb * m + g]
                                * (b.h_mumu * delta(a, g) - b.h_alpha[a * m + g])
                        })
                        .sum();
                    worst = worst.max((d[a * m + bb] - rhs).abs());
                }
            }
        }
        Some(worst)
    }
}

pub fn boundary_frame(sample: &SurfaceSample) -> BoundaryFrame {
    let nodes = match sample.grid.mode {
        GridMode::Axisym => vec![axisym_frame(sample)],
        GridMode::Full2d => sample
            .grid
            .equator()
            .map(|i| full2d_frame(sample, i))
            .collect(),
    };
    BoundaryFrame {
        theta: sample.theta,
        n: sample.n(),
        nodes,
    }
}

fn axisym_frame(sample: &SurfaceSample) -> BoundaryNode {
    let n = sample.n();
    let m = n - 1;
    let grid = sample.grid;
    let i = grid.n_beta - 1;
    let x = sample.x(i).to_vec();
    let (sb, zb) = (x[0], x[n]);
    let t = sample.d_beta(i);
    let l = dot(t, t).sqrt();
    let mu = unit(t.to_vec());
    let mut nu_bar = vec![0.0; n + 1];
    nu_bar[0] = zb;
    nu_bar[n] = -sb;
    let nu_bar = unit(nu_bar);
    let shape = sample.shape(i);
    let kp_at = |k: usize| sample.shape(k)[n + 1];
    let kp = kp_at(i);
    let diag = |v: f64| -> Vec<f64> { (0..m * m).map(|k| v * delta(k / m, k % m)).collect() };
    let h = grid.h_beta();
    let dkp = (3.0 * kp - 4.0 * kp_at(i - 1) + kp_at(i - 2)) / (2.0 * h) / l;
    BoundaryNode {
        node: i,
        nu: sample.nu(i).to_vec(),
        h_mumu: shape[0],
        h_mu_alpha: (1..n).map(|a| shape[a]).collect(),
        h_alpha: diag(kp),
        hhat: diag(nu_bar[0] / sb),
        htilde: diag(mu[0] / sb),
        dmu_h_alpha: Some(diag(dkp)),
        mu,
        nu_bar,
        n_bar: x,
    }
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn full2d_frame(sample: &SurfaceSample, i: usize) -> BoundaryNode {
    let grid = sample.grid;
    let nx = grid.n_xi;
    let (_, j) = grid.split(i);
    let xb = sample.d_beta(i);
    let xp = sample.d_xi(i).expect("full 2-D sample carries azimuthal tangents");
    let tan_len2 = dot(xp, xp);
    let t = unit(xp.to_vec());
    let proj = dot(xb, &t);
    let mu = unit((0..3).map(|k| xb[k] - proj * t[k]).collect());
    let n_bar = sample.x(i).to_vec();
    let nu_bar = unit(cross(&t, &n_bar));
    // orthonormal frame in which `shape` is expressed
    let e1 = unit(xb.to_vec());
    let p1 = dot(xp, &e1);
    let e2 = unit((0..3).map(|k| xp[k] - p1 * e1[k]).collect());
    let s = sample.shape(i);
    let form = |a: &[f64], b: &[f64]| {
        let ca = [dot(a, &e1), dot(a, &e2)];
        let cb = [dot(b, &e1), dot(b, &e2)];
        ca[0] * (s[0] * cb[0] + s[1] * cb[1]) + ca[1] * (s[2] * cb[0] + s[3] * cb[1])
    };
    let prev = sample.x(grid.node(grid.n_beta - 1, (j + nx - 1) % nx));
    let next = sample.x(grid.node(grid.n_beta - 1, (j + 1) % nx));
    let hx = grid.h_xi();
    let gpp: Vec<f64> = (0..3).map(|k| (next[k] - 2.0 * n_bar[k] + prev[k]) / (hx * hx)).collect();
    BoundaryNode {
        node: i,
        nu: sample.nu(i).to_vec(),
        h_mumu: form(&mu, &mu),
        h_mu_alpha: vec![form(&mu, &t)],
        h_alpha: vec![form(&t, &t)],
        hhat: vec![-dot(&gpp, &nu_bar) / tan_len2],
        htilde: vec![-dot(&gpp, &mu) / tan_len2],
        dmu_h_alpha: None,
        mu,
        nu_bar,
        n_bar,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cap::{cap_graph, CapParams};
    use crate::surface::{reconstruct, HemisphereGrid};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn cap_boundary_curvature_matches_relation() {
        for &theta in &[PI / 3.0, FRAC_PI_2] {
            let r = 0.7;
            let p = CapParams::new(theta, r, 2).unwrap();
            let expected = (1.0 / r + theta.cos()) / theta.sin();
            for grid in [HemisphereGrid::axisym(2, 128).unwrap(), HemisphereGrid::full2d(65, 64).unwrap()] {
                let s = reconstruct(&cap_graph(&p, &grid), &grid).unwrap();
                let f = boundary_frame(&s);
                for b in &f.nodes {
                    assert!((b.hhat[0] - expected).abs() < 1e-2, "{:?} {}", grid.mode, b.hhat[0]);
                }
                // direct geodesic curvature of the boundary latitude
                let alpha = p.boundary_angle();
                assert!((expected - 1.0 / alpha.tan()).abs() < 1e-12);
                assert!(f.angle_residual() < 1e-3);
                assert!(f.frame_residual() < 1e-3);
                assert!(f.tangential_residual() < 1e-2);
                assert!(f.conormal_residual() < 1e-2);
                assert!(f.principal_residual() < 1e-8);
            }
        }
    }

    #[test]
    fn codazzi_relation_on_axisym_caps() {
        let p = CapParams::new(1.0, 1.5, 3).unwrap();
        let grid = HemisphereGrid::axisym(3, 128).unwrap();
        let f = boundary_frame(&reconstruct(&cap_graph(&p, &grid), &grid).unwrap());
        assert!(f.codazzi_residual().unwrap() < 1e-4);
    }
}
