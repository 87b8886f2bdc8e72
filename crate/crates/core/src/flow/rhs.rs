use serde::{Deserialize, Serialize};

use crate::error::{CapflowError, Result};
use crate::par::map_indices;
use crate::surface::stencil::{axisym_derivs, full2d_jets, Chart};
use crate::surface::{GraphState, GridMode, HemisphereGrid, SurfaceSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    /// Volume-preserving mean curvature type flow.
    Mct,
    /// Capillary mean curvature flow.
    Mcf,
}

impl FlowMode {
    pub fn label(self) -> &'static str {
        match self {
            FlowMode::Mct => "mct",
            FlowMode::Mcf => "mcf",
        }
    }
}

impl std::str::FromStr for FlowMode {
    type Err = CapflowError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mct" => Ok(FlowMode::Mct),
            "mcf" => Ok(FlowMode::Mcf),
            _ => Err(CapflowError::invalid(format!("unknown flow mode `{s}` (mct|mcf)"))),
        }
    }
}

/// Nodewise normal speed `f` of the geometric flow, `x_t = f nu`.
pub fn normal_speed(sample: &SurfaceSample, mode: FlowMode) -> Vec<f64> {
    let n = sample.n();
    let ct = crate::cap::cos_theta(sample.theta);
    (0..sample.node_count())
        .map(|i| {
            let h = sample.mean_curvature(i);
            match mode {
                FlowMode::Mct => {
                    n as f64 * (sample.x(i)[n] + ct * sample.nu(i)[n]) - h * sample.xe_nu[i]
                }
                FlowMode::Mcf => -h,
            }
        })
        .collect()
}

/// Pointwise data of the graph equation at one node.
struct Local {
    u: f64,
    sin_b: f64,
    cos_b: f64,
    /// `u_beta`.
    radial: f64,
    grad2: f64,
    /// `Delta u - Hess u(grad u, grad u) / v^2`.
    principal: f64,
}

fn assemble(l: &Local, n: f64, cos_t: f64, mode: FlowMode) -> f64 {
    let (sh, ch) = (l.u.sinh(), l.u.cosh());
    let a = ch + l.cos_b;
    let v = (1.0 + l.grad2).sqrt();
    let tilt = l.sin_b * l.radial;
    let mct = a / v * l.principal - n * (sh * l.grad2 - tilt) / v - n * cos_t * sh * tilt
        + n * cos_t * (ch * l.cos_b + 1.0);
    match mode {
        FlowMode::Mct => mct,
        FlowMode::Mcf => {
            let h = mct + n * v * sh - n * cos_t * (ch * l.cos_b + 1.0 - sh * tilt);
            h * v * a
        }
    }
}

/// Graph speed `u_t = F` of the mean curvature type flow.
pub fn scalar_rhs(state: &GraphState, grid: &HemisphereGrid, theta: f64, n: usize) -> Result<Vec<f64>> {
    if n != grid.n {
        return Err(CapflowError::invalid(format!("dimension {n} does not match grid dimension {}", grid.n)));
    }
    let mut s = state.clone();
    s.theta = theta;
    graph_speed(&s, grid, FlowMode::Mct)
}

/// Graph speed `u_t = F` for either flow; the geometric speed is
/// `f = -F rho e^w / v`.
pub fn graph_speed(state: &GraphState, grid: &HemisphereGrid, mode: FlowMode) -> Result<Vec<f64>> {
    state.check(grid)?;
    let n = grid.n as f64;
    let cos_t = crate::cap::cos_theta(state.theta);
    let out = match grid.mode {
        GridMode::Axisym => {
            let h = grid.h_beta();
            let (p, q) = axisym_derivs(&state.u, h, state.theta);
            map_indices(grid.n_beta, |i| {
                let (sin_b, cos_b) = grid.beta(i).sin_cos();
                let v2 = 1.0 + p[i] * p[i];
                let principal = if i == 0 {
                    n * q[i]
                } else {
                    q[i] / v2 + (n - 1.0) * cos_b / sin_b * p[i]
                };
                let l = Local {
                    u: state.u[i],
                    sin_b,
                    cos_b,
                    radial: p[i],
                    grad2: p[i] * p[i],
                    principal,
                };
                assemble(&l, n, cos_t, mode)
            })
        }
        GridMode::Full2d => {
            let jets = full2d_jets(&state.u, grid, state.theta);
            map_indices(grid.node_count(), |k| {
                let jet = &jets[k];
                let (g, hs) = (jet.u.g, jet.u.h);
                let l = match jet.chart {
                    Chart::Pole => {
                        let grad2 = g[0] * g[0] + g[1] * g[1];
                        let hgg = g[0] * (hs[0][0] * g[0] + hs[0][1] * g[1])
                            + g[1] * (hs[1][0] * g[0] + hs[1][1] * g[1]);
                        Local {
                            u: jet.u.v,
                            sin_b: 0.0,
                            cos_b: 1.0,
                            radial: 0.0,
                            grad2,
                            principal: hs[0][0] + hs[1][1] - hgg / (1.0 + grad2),
                        }
                    }
                    Chart::Polar { beta, .. } => {
                        let (sb, cb) = beta.sin_cos();
                        let (ub, up) = (g[0], g[1]);
                        let (ubb, ubp, upp) = (hs[0][0], hs[0][1], hs[1][1]);
                        let s2 = sb * sb;
                        let grad2 = ub * ub + up * up / s2;
                        let lap = ubb + cb / sb * ub + upp / s2;
                        let gp = up / s2;
                        let hbp = ubp - cb / sb * up;
                        let hpp = upp + sb * cb * ub;
                        let hgg = ub * ub * ubb + 2.0 * ub * gp * hbp + gp * gp * hpp;
                        Local {
                            u: jet.u.v,
                            sin_b: sb,
                            cos_b: cb,
                            radial: ub,
                            grad2,
                            principal: lap - hgg / (1.0 + grad2),
                        }
                    }
                };
                assemble(&l, n, cos_t, mode)
            })
        }
    };
    Ok(out)
}

/// `rho e^w / v` at every node, the factor converting graph speed to normal speed.
pub fn speed_factor(state: &GraphState, grid: &HemisphereGrid) -> Vec<f64> {
    let grad2 = gradient_norm2(state, grid);
    (0..grid.node_count())
        .map(|k| {
            let (i, _) = grid.split(k);
            let a = state.u[k].cosh() + grid.beta(i).cos();
            1.0 / (a * (1.0 + grad2[k]).sqrt())
        })
        .collect()
}

/// `|grad u|^2` on the unit sphere at every node.
pub fn gradient_norm2(state: &GraphState, grid: &HemisphereGrid) -> Vec<f64> {
    match grid.mode {
        GridMode::Axisym => {
            let (p, _) = axisym_derivs(&state.u, grid.h_beta(), state.theta);
            p.iter().map(|x| x * x).collect()
        }
        GridMode::Full2d => full2d_jets(&state.u, grid, state.theta)
            .iter()
            .map(|jet| match jet.chart {
                Chart::Pole => jet.u.g[0] * jet.u.g[0] + jet.u.g[1] * jet.u.g[1],
                Chart::Polar { beta, .. } => {
                    let sb = beta.sin();
                    jet.u.g[0] * jet.u.g[0] + jet.u.g[1] * jet.u.g[1] / (sb * sb)
                }
            })
            .collect(),
    }
}
