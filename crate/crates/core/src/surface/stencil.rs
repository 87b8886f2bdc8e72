//! Difference stencils and boundary closures.
//!
//! Axisymmetric grids use fourth-order central differences in β. The pole
//! is closed by even reflection and the equator by two ghost nodes taken
//! from the quintic through the last five nodes whose slope at β = π/2 is
//! the boundary value `-cot(theta)`. Full 2-D grids use second-order
//! differences, a third-order one-sided closure at the equator, and a
//! Fourier fit of the first ring at the pole.

use crate::cap::validate_theta;
use crate::error::Result;
use crate::jet::Jet;

use super::{GraphState, GridMode, HemisphereGrid};

/// Boundary slope `u_beta` at the equator for a given azimuthal derivative.
pub fn boundary_slope(theta: f64, u_xi: f64) -> f64 {
    let c = crate::cap::cos_theta(theta);
    -c / theta.sin() * (1.0 + u_xi * u_xi).sqrt()
}

/// The two axisymmetric equator ghosts `u_N`, `u_{N+1}`.
pub(crate) fn axisym_ghosts(u: &[f64], h: f64, theta: f64) -> [f64; 2] {
    let n = u.len();
    let g = h * boundary_slope(theta, 0.0);
    let (u0, u1, u2, u3, u4) = (u[n - 1], u[n - 2], u[n - 3], u[n - 4], u[n - 5]);
    [
        5.0 * g - 65.0 * u0 / 12.0 + 10.0 * u1 - 5.0 * u2 + 5.0 * u3 / 3.0 - u4 / 4.0,
        30.0 * g - 95.0 * u0 / 2.0 + 80.0 * u1 - 45.0 * u2 + 16.0 * u3 - 5.0 * u4 / 2.0,
    ]
}

/// Ghost weights of the homogeneous closure, applied to `u[N-1], ..., u[N-5]`.
pub(crate) const GHOST_WEIGHTS: [[f64; 5]; 2] = [
    [-65.0 / 12.0, 10.0, -5.0, 5.0 / 3.0, -0.25],
    [-47.5, 80.0, -45.0, 16.0, -2.5],
];

/// `u` extended by two reflected pole ghosts in front and two equator ghosts behind.
pub(crate) fn axisym_extended(u: &[f64], h: f64, theta: f64) -> Vec<f64> {
    let n = u.len();
    let mut ext = Vec::with_capacity(n + 4);
    ext.push(u[2]);
    ext.push(u[1]);
    ext.extend_from_slice(u);
    ext.extend_from_slice(&axisym_ghosts(u, h, theta));
    ext
}

/// `(u_beta, u_betabeta)` at every axisymmetric node.
pub(crate) fn axisym_derivs(u: &[f64], h: f64, theta: f64) -> (Vec<f64>, Vec<f64>) {
    let ext = axisym_extended(u, h, theta);
    let n = u.len();
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let (a, b) = (1.0 / (12.0 * h), 1.0 / (12.0 * h * h));
    for i in 0..n {
        let w = &ext[i..i + 5];
        p.push((-w[4] + 8.0 * w[3] - 8.0 * w[1] + w[0]) * a);
        q.push((-w[4] + 16.0 * w[3] - 30.0 * w[2] + 16.0 * w[1] - w[0]) * b);
    }
    p[0] = 0.0;
    (p, q)
}

/// Per-node second-order jet of `u` on a full 2-D grid.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Chart {
    /// Coordinates `(beta, phi)`.
    Polar { beta: f64, phi: f64 },
    /// Cartesian coordinates `(beta cos(phi), beta sin(phi))` about the pole.
    Pole,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct NodeJet {
    pub chart: Chart,
    pub u: Jet<2>,
}

/// Equator ghosts of a full 2-D grid, one per azimuth.
pub(crate) fn full2d_ghosts(u: &[f64], grid: &HemisphereGrid, theta: f64) -> Vec<f64> {
    let (nb, nx) = (grid.n_beta, grid.n_xi);
    let (hb, hx) = (grid.h_beta(), grid.h_xi());
    (0..nx)
        .map(|j| {
            let at = |i: usize, jj: usize| u[i * nx + jj];
            let uxi = (at(nb - 1, (j + 1) % nx) - at(nb - 1, (j + nx - 1) % nx)) / (2.0 * hx);
            let g = boundary_slope(theta, uxi);
            (6.0 * hb * g - 3.0 * at(nb - 1, j) + 6.0 * at(nb - 2, j) - at(nb - 3, j)) / 2.0
        })
        .collect()
}

/// Gradient and Hessian of `u` at the pole in the Cartesian chart, from the
/// Fourier modes 0 to 2 of the first ring.
pub(crate) fn pole_jet(u: &[f64], grid: &HemisphereGrid) -> Jet<2> {
    let nx = grid.n_xi;
    let h = grid.h_beta();
    let u0 = u[0];
    let ring = &u[nx..2 * nx];
    let (mut m0, mut a1, mut b1, mut a2, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (j, &v) in ring.iter().enumerate() {
        let phi = grid.xi(j);
        m0 += v;
        a1 += v * phi.cos();
        b1 += v * phi.sin();
        a2 += v * (2.0 * phi).cos();
        b2 += v * (2.0 * phi).sin();
    }
    let nf = nx as f64;
    m0 /= nf;
    let (a1, b1, a2, b2) = (2.0 * a1 / nf, 2.0 * b1 / nf, 2.0 * a2 / nf, 2.0 * b2 / nf);
    let trace = 4.0 * (m0 - u0) / (h * h);
    let diff = 4.0 * a2 / (h * h);
    let hxy = 2.0 * b2 / (h * h);
    Jet::new(
        u0,
        [a1 / h, b1 / h],
        [[0.5 * (trace + diff), hxy], [hxy, 0.5 * (trace - diff)]],
    )
}

pub(crate) fn full2d_jets(u: &[f64], grid: &HemisphereGrid, theta: f64) -> Vec<NodeJet> {
    let (nb, nx) = (grid.n_beta, grid.n_xi);
    let (hb, hx) = (grid.h_beta(), grid.h_xi());
    let ghosts = full2d_ghosts(u, grid, theta);
    let pole = pole_jet(u, grid);
    let at = |i: usize, j: usize| -> f64 {
        let j = j % nx;
        if i == nb {
            ghosts[j]
        } else {
            u[i * nx + j]
        }
    };
    crate::par::map_indices(grid.node_count(), |node| {
        let (i, j) = grid.split(node);
        if i == 0 {
            return NodeJet {
                chart: Chart::Pole,
                u: pole,
            };
        }
        let jm = j + nx - 1;
        let jp = j + 1;
        let c = at(i, j);
        let ub = (at(i + 1, j) - at(i - 1, j)) / (2.0 * hb);
        let ubb = (at(i + 1, j) - 2.0 * c + at(i - 1, j)) / (hb * hb);
        let up = (at(i, jp) - at(i, jm)) / (2.0 * hx);
        let upp = (at(i, jp) - 2.0 * c + at(i, jm)) / (hx * hx);
        let ubp = (at(i + 1, jp) - at(i + 1, jm) - at(i - 1, jp) + at(i - 1, jm)) / (4.0 * hb * hx);
        NodeJet {
            chart: Chart::Polar {
                beta: grid.beta(i),
                phi: grid.xi(j),
            },
            u: Jet::new(c, [ub, up], [[ubb, ubp], [ubp, upp]]),
        }
    })
}

/// Validates the contact angle, averages the full 2-D pole row, and stores
/// the equator ghost values in the returned state.
pub fn enforce_bc(state: &GraphState, grid: &HemisphereGrid, theta: f64) -> Result<GraphState> {
    validate_theta(theta)?;
    let mut out = state.clone();
    out.theta = theta;
    match grid.mode {
        GridMode::Axisym => {
            out.ghost = axisym_ghosts(&out.u, grid.h_beta(), theta).to_vec();
        }
        GridMode::Full2d => {
            let nx = grid.n_xi;
            if out.u[1..nx].iter().any(|&v| v != out.u[0]) {
                let mean = out.u[..nx].iter().sum::<f64>() / nx as f64;
                out.u[..nx].iter_mut().for_each(|v| *v = mean);
            }
            out.ghost = full2d_ghosts(&out.u, grid, theta);
        }
    }
    Ok(out)
}

/// Largest deviation of the one-sided equator slope from the boundary value.
pub fn bc_residual(state: &GraphState, grid: &HemisphereGrid) -> f64 {
    let h = grid.h_beta();
    let nx = grid.n_xi;
    (0..nx)
        .map(|j| {
            let m = state.meridian(grid, j);
            let n = m.len();
            let (slope, uxi) = match grid.mode {
                GridMode::Axisym => (
                    (25.0 * m[n - 1] - 48.0 * m[n - 2] + 36.0 * m[n - 3] - 16.0 * m[n - 4]
                        + 3.0 * m[n - 5])
                        / (12.0 * h),
                    0.0,
                ),
                GridMode::Full2d => {
                    let e = |jj: usize| state.u[grid.node(grid.n_beta - 1, jj % nx)];
                    (
                        (3.0 * m[n - 1] - 4.0 * m[n - 2] + m[n - 3]) / (2.0 * h),
                        (e(j + 1) - e(j + nx - 1)) / (2.0 * grid.h_xi()),
                    )
                }
            };
            (slope - boundary_slope(state.theta, uxi)).abs()
        })
        .fold(0.0, f64::max)
}

/// Minimal-norm change of the two rows nearest the equator that makes the
/// one-sided equator slope match the boundary condition.
pub fn project_bc(state: &GraphState, grid: &HemisphereGrid) -> Result<GraphState> {
    validate_theta(state.theta)?;
    let mut out = state.clone();
    // Full 2-D slopes depend on the corrected equator row itself; a few sweeps settle it.
    for _ in 0..20 {
        project_sweep(&mut out, grid);
        if bc_residual(&out, grid) < 1e-13 {
            break;
        }
    }
    enforce_bc(&out, grid, state.theta)
}

fn project_sweep(out: &mut GraphState, grid: &HemisphereGrid) {
    let state = out.clone();
    let h = grid.h_beta();
    let nb = grid.n_beta;
    let nx = grid.n_xi;
    for j in 0..nx {
        let idx = |i: usize| grid.node(i, j);
        let u = |i: usize| out.u[idx(i)];
        let (a0, a1, slope, uxi) = match grid.mode {
            GridMode::Axisym => {
                let slope = (25.0 * u(nb - 1) - 48.0 * u(nb - 2) + 36.0 * u(nb - 3)
                    - 16.0 * u(nb - 4)
                    + 3.0 * u(nb - 5))
                    / (12.0 * h);
                (25.0 / (12.0 * h), -48.0 / (12.0 * h), slope, 0.0)
            }
            GridMode::Full2d => {
                let e = |jj: usize| state.u[grid.node(nb - 1, jj % nx)];
                let slope = (3.0 * u(nb - 1) - 4.0 * u(nb - 2) + u(nb - 3)) / (2.0 * h);
                let uxi = (e(j + 1) - e(j + nx - 1)) / (2.0 * grid.h_xi());
                (3.0 / (2.0 * h), -4.0 / (2.0 * h), slope, uxi)
            }
        };
        let r = boundary_slope(state.theta, uxi) - slope;
        let norm2 = a0 * a0 + a1 * a1;
        out.u[idx(nb - 1)] += a0 * r / norm2;
        out.u[idx(nb - 2)] += a1 * r / norm2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cap::{cap_graph, CapParams};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn ghost_closure_reproduces_quintics_with_boundary_slope() {
        // u(beta) = a quintic in (beta - pi/2) with slope -cot(theta) at pi/2.
        let theta: f64 = 1.0;
        let g = -1.0 / theta.tan();
        let poly = |b: f64| {
            let x = b - FRAC_PI_2;
            0.3 + g * x + 0.7 * x * x - 0.2 * x.powi(3) + 0.1 * x.powi(4) - 0.05 * x.powi(5)
        };
        let grid = HemisphereGrid::axisym(2, 40).unwrap();
        let h = grid.h_beta();
        let u: Vec<f64> = (0..40).map(|i| poly(grid.beta(i))).collect();
        let gh = axisym_ghosts(&u, h, theta);
        assert!((gh[0] - poly(FRAC_PI_2 + h)).abs() < 1e-12);
        assert!((gh[1] - poly(FRAC_PI_2 + 2.0 * h)).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_weights_match_ghost_formula() {
        let u: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let gh = axisym_ghosts(&u, 0.1, FRAC_PI_2);
        for k in 0..2 {
            let w: f64 = (0..5).map(|j| GHOST_WEIGHTS[k][j] * u[19 - j]).sum();
            assert!((w - gh[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn fourth_order_derivatives_on_smooth_even_function() {
        let f = |b: f64| (2.0 * b).cos() * 0.3;
        let mut errs = Vec::new();
        for nb in [33, 65] {
            let grid = HemisphereGrid::axisym(2, nb).unwrap();
            let u: Vec<f64> = (0..nb).map(|i| f(grid.beta(i))).collect();
            // cos(2 beta) has zero slope at pi/2, matching theta = pi/2.
            let (p, q) = axisym_derivs(&u, grid.h_beta(), FRAC_PI_2);
            let e = (0..nb)
                .map(|i| {
                    let b = grid.beta(i);
                    (p[i] + 0.6 * (2.0 * b).sin()).abs().max((q[i] + 1.2 * (2.0 * b).cos()).abs())
                })
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn enforce_bc_rejects_obtuse_angles() {
        let grid = HemisphereGrid::axisym(2, 32).unwrap();
        let s = GraphState::new(vec![0.0; 32], 2.0);
        assert!(matches!(
            enforce_bc(&s, &grid, 2.0),
            Err(crate::error::CapflowError::ObliquenessViolated(_))
        ));
    }

    #[test]
    fn boundary_slope_examples() {
        assert!(boundary_slope(FRAC_PI_2, 0.3).abs() < 1e-16);
        assert!((boundary_slope(PI / 3.0, 0.0) + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        // the closed-form root satisfies the unreduced relation
        let (theta, uxi) = (0.8, 0.4);
        let ub = boundary_slope(theta, uxi);
        assert!((ub + theta.cos() * (1.0 + ub * ub + uxi * uxi).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cap_profiles_satisfy_discrete_bc() {
        let p = CapParams::new(PI / 3.0, 1.0, 2).unwrap();
        let mut res = Vec::new();
        for nb in [64, 128] {
            let grid = HemisphereGrid::axisym(2, nb).unwrap();
            res.push(bc_residual(&cap_graph(&p, &grid), &grid));
        }
        assert!(res[1] < res[0] / 8.0 && res[1] < 1e-6, "{res:?}");
    }

    #[test]
    fn projection_fixes_the_discrete_slope() {
        let grid = HemisphereGrid::axisym(2, 48).unwrap();
        let u: Vec<f64> = (0..48).map(|i| 0.5 + 0.1 * grid.beta(i)).collect();
        let s = GraphState::new(u, PI / 3.0);
        let fixed = project_bc(&s, &grid).unwrap();
        assert!(bc_residual(&fixed, &grid) < 1e-10);
        let changed = (0..48).filter(|&i| fixed.u[i] != s.u[i]).count();
        assert_eq!(changed, 2);
        let grid2 = HemisphereGrid::full2d(24, 16).unwrap();
        let u2: Vec<f64> = (0..grid2.node_count()).map(|k| 0.5 + 0.01 * (k % 16) as f64).collect();
        let fixed2 = project_bc(&GraphState::new(u2, 1.0), &grid2).unwrap();
        assert!(bc_residual(&fixed2, &grid2) < 1e-10);
    }

    #[test]
    fn pole_fit_recovers_quadratic() {
        // u = 0.2 + 0.1 x - 0.3 y + 0.5 x^2 + 0.2 x y - 0.4 y^2 in the pole chart
        let grid = HemisphereGrid::full2d(40, 16).unwrap();
        let f = |b: f64, phi: f64| {
            let (x, y) = (b * phi.cos(), b * phi.sin());
            0.2 + 0.1 * x - 0.3 * y + 0.5 * x * x + 0.2 * x * y - 0.4 * y * y
        };
        let u: Vec<f64> = (0..grid.node_count())
            .map(|k| {
                let (i, j) = grid.split(k);
                f(grid.beta(i), grid.xi(j))
            })
            .collect();
        let jet = pole_jet(&u, &grid);
        assert!((jet.g[0] - 0.1).abs() < 1e-12 && (jet.g[1] + 0.3).abs() < 1e-12);
        assert!((jet.h[0][0] - 1.0).abs() < 1e-9);
        assert!((jet.h[0][1] - 0.2).abs() < 1e-9);
        assert!((jet.h[1][1] + 0.8).abs() < 1e-9);
    }
}
