//! Reconstruction of the embedded surface from a graph state.
//!
//! Node-wise derivatives of `u` are packed into second-order jets and pushed
//! through the inverse Moebius map, which gives the tangent vectors and the
//! second derivatives of the embedding in the ball directly.

use crate::cap::sphere_area;
use crate::error::{CapflowError, Result};
use crate::geometry::{dot, meridian_point, xe_field_raw};
use crate::jet::Jet;
use crate::par::{map_indices, pairwise_sum};
use crate::quad::trapezoid_weights;

use super::stencil::{axisym_derivs, full2d_jets, Chart};
use super::{GraphState, GridMode, HemisphereGrid};

/// Metric determinants below this are treated as degenerate.
const DET_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct SurfaceSample {
    pub grid: HemisphereGrid,
    pub theta: f64,
    /// Ambient dimension `n + 1`.
    pub dim: usize,
    /// Positions, `dim` per node.
    pub x: Vec<f64>,
    /// Unit normals pointing out of the enclosed region, `dim` per node.
    pub nu: Vec<f64>,
    /// Area weights including the quadrature weights.
    pub da: Vec<f64>,
    /// Second fundamental form in an orthonormal tangent frame, `n * n` per node.
    pub shape: Vec<f64>,
    /// Principal curvatures in ascending order, `n` per node.
    pub kappa: Vec<f64>,
    /// `H_1, ..., H_n` per node.
    pub hk: Vec<f64>,
    pub xe_nu: Vec<f64>,
    /// `d x / d beta` per node, followed on full 2-D grids by `d x / d xi`.
    pub tangent: Vec<f64>,
}

impl SurfaceSample {
    pub fn n(&self) -> usize {
        self.dim - 1
    }

    pub fn node_count(&self) -> usize {
        self.da.len()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nu(&self, i: usize) -> &[f64] {
        &self.nu[i * self.dim..(i + 1) * self.dim]
    }

    pub fn kappa(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.kappa[i * n..(i + 1) * n]
    }

    pub fn shape(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.shape[i * n * n..(i + 1) * n * n]
    }

    /// `H_k` at node `i`, with `H_0 = 1`.
    pub fn h(&self, k: usize, i: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.hk[i * self.n() + k - 1]
        }
    }

    /// Mean curvature `H = n H_1`.
    pub fn mean_curvature(&self, i: usize) -> f64 {
        self.n() as f64 * self.h(1, i)
    }

    pub fn d_beta(&self, i: usize) -> &[f64] {
        let stride = self.tangent_stride();
        &self.tangent[i * stride..i * stride + self.dim]
    }

    pub fn d_xi(&self, i: usize) -> Option<&[f64]> {
        let stride = self.tangent_stride();
        (stride > self.dim).then(|| &self.tangent[i * stride + self.dim..(i + 1) * stride])
    }

    fn tangent_stride(&self) -> usize {
        match self.grid.mode {
            GridMode::Axisym => self.dim,
            GridMode::Full2d => 2 * self.dim,
        }
    }

    pub fn kappa_min(&self) -> f64 {
        (0..self.node_count()).map(|i| self.kappa(i)[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn kappa_max(&self) -> f64 {
        let n = self.n();
        (0..self.node_count())
            .map(|i| self.kappa(i)[n - 1])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn xe_nu_min(&self) -> f64 {
        self.xe_nu.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Surface integral of a node function by the grid quadrature.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let terms: Vec<f64> = (0..self.node_count())
            .map(|i| if self.da[i] == 0.0 { 0.0 } else { self.da[i] * f(i) })
            .collect();
        pairwise_sum(&terms)
    }

    pub fn area(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// Largest `max(kappa) / min(kappa) - 1` over nodes.
    pub fn umbilicity_defect(&self) -> f64 {
        let n = self.n();
        (0..self.node_count())
            .map(|i| {
                let k = self.kappa(i);
                k[n - 1] / k[0] - 1.0
            })
            .fold(0.0, f64::max)
    }
}

/// `H_1, ..., H_n` of the principal curvatures.
pub fn elementary_means(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    let mut sigma = vec![0.0; n + 1];
    sigma[0] = 1.0;
    for &k in kappa {
        for j in (1..=n).rev() {
            sigma[j] += k * sigma[j - 1];
        }
    }
    let mut binom = 1.0;
    (1..=n)
        .map(|k| {
            binom = binom * (n + 1 - k) as f64 / k as f64;
            sigma[k] / binom
        })
        .collect()
}

#[derive(Clone, Copy, Default)]
struct Meridian {
    s: f64,
    z: f64,
    ds: f64,
    dz: f64,
    km: f64,
    kp: f64,
}

fn axisym_node(u: f64, p: f64, q: f64, beta: f64, pole: bool) -> Meridian {
    let b = Jet::<1>::variable(beta, 0);
    let uj = Jet::<1>::new(u, [p], [[q]]);
    let (s, z) = meridian_point(uj, b.sin(), b.cos());
    let (ds, dz) = (s.g[0], z.g[0]);
    let (dds, ddz) = (s.h[0][0], z.h[0][0]);
    let l = ds.hypot(dz);
    let km = (ddz * ds - dds * dz) / (l * l * l);
    let kp = if pole { km } else { dz / (l * s.v) };
    Meridian {
        s: if pole { 0.0 } else { s.v },
        z: z.v,
        ds,
        dz,
        km,
        kp,
    }
}

struct Node3 {
    x: [f64; 3],
    nu: [f64; 3],
    shape: [f64; 4],
    kappa: [f64; 2],
    tb: [f64; 3],
    tx: [f64; 3],
    area_density: f64,
    det: f64,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn full2d_node(chart: Chart, u: Jet<2>) -> Node3 {
    let (z1, z2, z3) = match chart {
        Chart::Polar { beta, phi } => {
            let b = Jet::<2>::variable(beta, 0);
            let ph = Jet::<2>::variable(phi, 1);
            let sb = b.sin();
            (sb * ph.cos(), sb * ph.sin(), b.cos())
        }
        Chart::Pole => (
            Jet::<2>::variable(0.0, 0),
            Jet::<2>::variable(0.0, 1),
            Jet::<2>::new(1.0, [0.0; 2], [[-1.0, 0.0], [0.0, -1.0]]),
        ),
    };
    let rho = u.exp();
    let (y1, y2, y3) = (rho * z1, rho * z2, rho * z3);
    let horiz = y1 * y1 + y2 * y2;
    let inv = (horiz + (y3 + 1.0) * (y3 + 1.0)).recip();
    let xs = [y1 * inv * 2.0, y2 * inv * 2.0, (horiz + y3 * y3 - 1.0) * inv];
    let t0 = [xs[0].g[0], xs[1].g[0], xs[2].g[0]];
    let t1 = [xs[0].g[1], xs[1].g[1], xs[2].g[1]];
    let g = [
        dot(&t0, &t0),
        dot(&t0, &t1),
        dot(&t1, &t1),
    ];
    let det = g[0] * g[2] - g[1] * g[1];
    let nrm = cross(t0, t1);
    let len = dot(&nrm, &nrm).sqrt();
    let nu = [-nrm[0] / len, -nrm[1] / len, -nrm[2] / len];
    let second = |a: usize, b: usize| -> f64 {
        -(xs[0].h[a][b] * nu[0] + xs[1].h[a][b] * nu[1] + xs[2].h[a][b] * nu[2])
    };
    let (h00, h01, h11) = (second(0, 0), second(0, 1), second(1, 1));
    // S = L^-1 h L^-T with g = L L^T
    let l00 = g[0].sqrt();
    let l10 = g[1] / l00;
    let l11 = (g[2] - l10 * l10).sqrt();
    let s00 = h00 / (l00 * l00);
    let s01 = (h01 - l10 * s00 * l00) / (l00 * l11);
    let s11 = (h11 - 2.0 * l10 * s01 * l11 - l10 * l10 * s00) / (l11 * l11);
    let mean = 0.5 * (s00 + s11);
    let rad = (0.25 * (s00 - s11) * (s00 - s11) + s01 * s01).sqrt();
    let area_density = match chart {
        Chart::Polar { .. } => det.max(0.0).sqrt(),
        Chart::Pole => 0.0,
    };
    Node3 {
        x: [xs[0].v, xs[1].v, xs[2].v],
        nu,
        shape: [s00, s01, s01, s11],
        kappa: [mean - rad, mean + rad],
        tb: t0,
        tx: t1,
        area_density,
        det,
    }
}

/// Embedding, normals, area weights and curvatures of the graph `state`.
pub fn reconstruct(state: &GraphState, grid: &HemisphereGrid) -> Result<SurfaceSample> {
    state.check(grid)?;
    match grid.mode {
        GridMode::Axisym => reconstruct_axisym(state, grid),
        GridMode::Full2d => reconstruct_full2d(state, grid),
    }
}

fn reconstruct_axisym(state: &GraphState, grid: &HemisphereGrid) -> Result<SurfaceSample> {
    let n = grid.n;
    let dim = n + 1;
    let nb = grid.n_beta;
    let h = grid.h_beta();
    let (p, q) = axisym_derivs(&state.u, h, state.theta);
    let nodes = map_indices(nb, |i| axisym_node(state.u[i], p[i], q[i], grid.beta(i), i == 0));
    let weights = trapezoid_weights(nb, h);
    let omega = sphere_area(n - 1);
    let mut out = SurfaceSample {
        grid: *grid,
        theta: state.theta,
        dim,
        x: vec![0.0; nb * dim],
        nu: vec![0.0; nb * dim],
        da: vec![0.0; nb],
        shape: vec![0.0; nb * n * n],
        kappa: vec![0.0; nb * n],
        hk: vec![0.0; nb * n],
        xe_nu: vec![0.0; nb],
        tangent: vec![0.0; nb * dim],
    };
    let mut kap = vec![0.0; n];
    for (i, m) in nodes.iter().enumerate() {
        let l2 = m.ds * m.ds + m.dz * m.dz;
        if !(l2 >= DET_FLOOR) {
            return Err(CapflowError::DegenerateMetric { node: i, det: l2 });
        }
        let l = l2.sqrt();
        let (nr, nz) = (m.dz / l, -m.ds / l);
        let b = i * dim;
        out.x[b] = m.s;
        out.x[b + n] = m.z;
        out.nu[b] = nr;
        out.nu[b + n] = nz;
        out.tangent[b] = m.ds;
        out.tangent[b + n] = m.dz;
        out.da[i] = omega * m.s.powi(n as i32 - 1) * l * weights[i];
        let xe = xe_field_raw(&[m.s, m.z], &[0.0, 1.0]);
        out.xe_nu[i] = xe[0] * nr + xe[1] * nz;
        kap[0] = m.km;
        kap[1..].iter_mut().for_each(|v| *v = m.kp);
        for a in 0..n {
            out.shape[i * n * n + a * n + a] = kap[a];
        }
        kap.sort_by(f64::total_cmp);
        out.kappa[i * n..(i + 1) * n].copy_from_slice(&kap);
        out.hk[i * n..(i + 1) * n].copy_from_slice(&elementary_means(&kap));
    }
    Ok(out)
}

fn reconstruct_full2d(state: &GraphState, grid: &HemisphereGrid) -> Result<SurfaceSample> {
    let jets = full2d_jets(&state.u, grid, state.theta);
    let nx = grid.n_xi;
    let pole = full2d_node(jets[0].chart, jets[0].u);
    let rest = map_indices(grid.node_count() - nx, |k| {
        let jet = jets[k + nx];
        full2d_node(jet.chart, jet.u)
    });
    let wb = trapezoid_weights(grid.n_beta, grid.h_beta());
    let count = grid.node_count();
    let mut out = SurfaceSample {
        grid: *grid,
        theta: state.theta,
        dim: 3,
        x: vec![0.0; count * 3],
        nu: vec![0.0; count * 3],
        da: vec![0.0; count],
        shape: vec![0.0; count * 4],
        kappa: vec![0.0; count * 2],
        hk: vec![0.0; count * 2],
        xe_nu: vec![0.0; count],
        tangent: vec![0.0; count * 6],
    };
    for i in 0..count {
        let node = if i < nx { &pole } else { &rest[i - nx] };
        if !(node.det >= DET_FLOOR) {
            return Err(CapflowError::DegenerateMetric { node: i, det: node.det });
        }
        let (bi, _) = grid.split(i);
        out.x[3 * i..3 * i + 3].copy_from_slice(&node.x);
        out.nu[3 * i..3 * i + 3].copy_from_slice(&node.nu);
        out.shape[4 * i..4 * i + 4].copy_from_slice(&node.shape);
        out.kappa[2 * i..2 * i + 2].copy_from_slice(&node.kappa);
        out.hk[2 * i..2 * i + 2].copy_from_slice(&elementary_means(&node.kappa));
        out.tangent[6 * i..6 * i + 3].copy_from_slice(&node.tb);
        out.tangent[6 * i + 3..6 * i + 6].copy_from_slice(&node.tx);
        out.da[i] = node.area_density * wb[bi] * grid.h_xi();
        let xe = xe_field_raw(&node.x, &[0.0, 0.0, 1.0]);
        out.xe_nu[i] = dot(&xe, &node.nu);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cap::{cap_graph, cap_measures, CapParams};
    use crate::geometry::conformal_factor;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
        v.fold(0.0, |a, b| a.max(b.abs()))
    }

    #[test]
    fn unit_free_boundary_cap_has_unit_curvatures() {
        let p = CapParams::new(FRAC_PI_2, 1.0, 2).unwrap();
        for grid in [HemisphereGrid::axisym(2, 64).unwrap(), HemisphereGrid::full2d(33, 16).unwrap()] {
            let s = reconstruct(&cap_graph(&p, &grid), &grid).unwrap();
            let err = max_abs(s.kappa.iter().map(|k| k - 1.0));
            assert!(err < 1e-3, "{:?} err = {err}", grid.mode);
        }
    }

    #[test]
    fn flat_balls_have_zero_curvature() {
        for &theta in &[PI / 3.0, FRAC_PI_2] {
            let p = CapParams::flat(theta, 3).unwrap();
            let grid = HemisphereGrid::axisym(3, 64).unwrap();
            let s = reconstruct(&cap_graph(&p, &grid), &grid).unwrap();
            assert!(max_abs(s.kappa.iter().copied()) < 1e-6);
            for i in 0..s.node_count() {
                assert!((s.nu(i)[3] + 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn cap_curvature_converges_at_fourth_order_axisym() {
        let p = CapParams::new(PI / 3.0, 0.5, 2).unwrap();
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&nb| {
                let grid = HemisphereGrid::axisym(2, nb).unwrap();
                let s = reconstruct(&cap_graph(&p, &grid), &grid).unwrap();
                max_abs(s.kappa.iter().map(|k| k - 2.0))
            })
            .collect();
        assert!(errs[1] / errs[2] > 3.7, "{errs:?}");
    }

    #[test]
    fn xe_nu_matches_half_space_expression() {
        for &theta in &[0.5, PI / 3.0, FRAC_PI_2] {
            let p = CapParams::new(theta, 1.3, 2).unwrap();
            let grid = HemisphereGrid::axisym(2, 512).unwrap();
            let s = reconstruct(&cap_graph(&p, &grid), &grid).unwrap();
            for i in 0..grid.n_beta {
                let beta = grid.beta(i);
                let (u, ub, _) = p.profile(beta);
                let rho = u.exp();
                let expected = conformal_factor(rho, beta) * rho / (1.0 + ub * ub).sqrt();
                assert!((s.xe_nu[i] - expected).abs() < 1e-10, "node {i} {} {expected}", s.xe_nu[i]);
            }
        }
    }

    #[test]
    fn normals_are_unit_and_area_converges() {
        let p = CapParams::new(PI / 3.0, 2.0, 2).unwrap();
        let exact = cap_measures(&p).unwrap().area;
        let mut errs = Vec::new();
        for nb in [64, 128] {
            let grid = HemisphereGrid::axisym(2, nb).unwrap();
            let s = reconstruct(&cap_graph(&p, &grid), &grid).unwrap();
            for i in 0..s.node_count() {
                assert!((dot(s.nu(i), s.nu(i)) - 1.0).abs() < 1e-10);
            }
            errs.push((s.area() - exact).abs());
        }
        assert!(errs[0] / errs[1] > 3.8, "{errs:?}");
        let grid = HemisphereGrid::full2d(65, 32).unwrap();
        let s = reconstruct(&cap_graph(&p, &grid), &grid).unwrap();
        assert!((s.area() - exact).abs() < 1e-3 * exact);
    }

    #[test]
    fn elementary_means_examples() {
        let h = elementary_means(&[1.0, 2.0, 3.0]);
        assert!((h[0] - 2.0).abs() < 1e-15);
        assert!((h[1] - 11.0 / 3.0).abs() < 1e-15);
        assert!((h[2] - 6.0).abs() < 1e-15);
    }

    #[test]
    fn full2d_matches_axisym_on_caps() {
        let p = CapParams::new(1.0, 0.8, 2).unwrap();
        let ga = HemisphereGrid::axisym(2, 33).unwrap();
        let gf = HemisphereGrid::full2d(33, 16).unwrap();
        let sa = reconstruct(&cap_graph(&p, &ga), &ga).unwrap();
        let sf = reconstruct(&cap_graph(&p, &gf), &gf).unwrap();
        for i in 0..33 {
            let j = gf.node(i, 0);
            assert!((sa.x(i)[0] - sf.x(j)[0]).abs() < 1e-12);
            assert!((sa.x(i)[2] - sf.x(j)[2]).abs() < 1e-12);
            assert!((sa.xe_nu[i] - sf.xe_nu[j]).abs() < 1e-3);
        }
    }
}
