//! Time integration of the scalar graph equations on the hemisphere.

mod linear;
mod rhs;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cap::{cap_graph, cap_radius_from_quermass, cap_shell, CapParams};
use crate::error::{CapflowError, Result};
use crate::quermass::{quermass_vector, resolved_sign};
use crate::surface::stencil::project_bc;
use crate::surface::{reconstruct, GraphState, GridMode, HemisphereGrid, SurfaceSample};
use crate::trajectory::{TrajectoryRecord, TrajectoryRow};
use crate::verify::EstimateBundle;

pub use crate::surface::enforce_bc;
pub use rhs::{gradient_norm2, graph_speed, normal_speed, scalar_rhs, speed_factor, FlowMode};

use linear::{axisym_implicit_matrix, Full2dOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExplicitEuler,
    Imex,
}

impl std::str::FromStr for Scheme {
    type Err = CapflowError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit_euler" | "explicit" => Ok(Scheme::ExplicitEuler),
            "imex" => Ok(Scheme::Imex),
            _ => Err(CapflowError::invalid(format!("unknown scheme `{s}` (explicit_euler|imex)"))),
        }
    }
}

/// Largest number of step-size halvings before a step is abandoned.
pub const MAX_REJECTIONS: usize = 10;

/// Step-size factor of the fourth-order axisymmetric stencils, whose
/// second-difference symbol peaks at `16 / (3 h^2)` rather than `4 / h^2`.
const AXISYM_STENCIL_FACTOR: f64 = 0.75;

/// Curvatures above `-KAPPA_SLACK` count as non-negative.
const KAPPA_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub mode: FlowMode,
    pub theta: f64,
    pub n: usize,
    pub grid: HemisphereGrid,
    pub dt_safety: f64,
    pub t_max: f64,
    pub stop_tol: f64,
    pub monitor_every: usize,
    pub scheme: Scheme,
    /// Multiple of the explicit step used by the IMEX scheme.
    pub imex_factor: f64,
    /// Overrides the CFL step when set.
    pub fixed_dt: Option<f64>,
    /// Ends the run without error once the step index reaches this value.
    pub max_steps: Option<usize>,
}

impl FlowConfig {
    pub fn new(mode: FlowMode, theta: f64, grid: HemisphereGrid) -> Self {
        Self {
            mode,
            theta,
            n: grid.n,
            grid,
            dt_safety: 0.5,
            t_max: 10.0,
            stop_tol: 1e-6,
            monitor_every: 10,
            scheme: Scheme::ExplicitEuler,
            imex_factor: 50.0,
            fixed_dt: None,
            max_steps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::cap::validate_theta(self.theta)?;
        if self.n != self.grid.n {
            return Err(CapflowError::invalid(format!(
                "config dimension {} differs from grid dimension {}",
                self.n, self.grid.n
            )));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(CapflowError::invalid(format!("dt_safety = {} outside (0, 1]", self.dt_safety)));
        }
        if !(self.stop_tol > 0.0) {
            return Err(CapflowError::invalid("stop_tol must be positive"));
        }
        if !(self.t_max > 0.0) {
            return Err(CapflowError::invalid("t_max must be positive"));
        }
        if self.monitor_every == 0 {
            return Err(CapflowError::invalid("monitor_every must be >= 1"));
        }
        if !(self.imex_factor >= 1.0 && self.imex_factor <= 50.0) {
            return Err(CapflowError::invalid(format!("imex_factor = {} outside [1, 50]", self.imex_factor)));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CapflowError::invalid("fixed_dt must be positive"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Cap-profile barrier and run-level bounds recorded at the start of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunBracket {
    pub r1: f64,
    pub r2: f64,
    /// Lower and upper profile per latitude.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub c0: Option<(f64, f64)>,
    pub c1: Option<f64>,
    pub slack: f64,
}

impl RunBracket {
    /// Brackets `state` between the profiles of its cap shell. The scalar
    /// bounds are kept only if the initial state satisfies them.
    pub fn new(state: &GraphState, grid: &HemisphereGrid) -> Result<Self> {
        let shell = cap_shell(state, grid)?;
        Self::with_radii(state, grid, shell.r1, shell.r2)
    }

    pub fn with_radii(state: &GraphState, grid: &HemisphereGrid, r1: f64, r2: f64) -> Result<Self> {
        let (theta, n) = (state.theta, grid.n);
        let p1 = CapParams::new(theta, r1, n)?;
        let p2 = CapParams::new(theta, r2, n)?;
        let upper = (0..grid.n_beta).map(|i| p1.profile(grid.beta(i)).0).collect();
        let lower = (0..grid.n_beta).map(|i| p2.profile(grid.beta(i)).0).collect();
        let bundle = EstimateBundle::new(theta, r1, r2)?;
        let (c1, c2) = bundle.c0_bounds();
        let c3 = bundle.c1_bound();
        let mut out = Self {
            r1,
            r2,
            lower,
            upper,
            c0: Some((c1, c2)),
            c1: Some(c3),
            slack: grid.h_min() * grid.h_min(),
        };
        if out.c0_violation(state).is_some() {
            out.c0 = None;
        }
        if out.c1_violation(state, grid).is_some() {
            out.c1 = None;
        }
        Ok(out)
    }

    /// Rebuilds a bracket from its scalar data, keeping the recorded bounds.
    pub fn from_parts(theta: f64, grid: &HemisphereGrid, parts: &BracketParts) -> Result<Self> {
        let n = grid.n;
        let p1 = CapParams::new(theta, parts.r1, n)?;
        let p2 = CapParams::new(theta, parts.r2, n)?;
        Ok(Self {
            r1: parts.r1,
            r2: parts.r2,
            upper: (0..grid.n_beta).map(|i| p1.profile(grid.beta(i)).0).collect(),
            lower: (0..grid.n_beta).map(|i| p2.profile(grid.beta(i)).0).collect(),
            c0: parts.c0,
            c1: parts.c1,
            slack: parts.slack,
        })
    }

    pub fn parts(&self) -> BracketParts {
        BracketParts {
            r1: self.r1,
            r2: self.r2,
            c0: self.c0,
            c1: self.c1,
            slack: self.slack,
        }
    }

    fn c0_violation(&self, state: &GraphState) -> Option<String> {
        let (c1, c2) = self.c0?;
        let k = state.u.iter().position(|&u| u < c1 || u > c2)?;
        Some(format!("u = {} outside [{c1}, {c2}] at node {k}", state.u[k]))
    }

    fn c1_violation(&self, state: &GraphState, grid: &HemisphereGrid) -> Option<String> {
        let c3 = self.c1?;
        let g = gradient_norm2(state, grid);
        let k = g.iter().position(|&x| x.sqrt() > c3)?;
        Some(format!("|grad u| = {} exceeds {c3} at node {k}", g[k].sqrt()))
    }

    /// Describes the first violated bound, if any.
    pub fn violation(&self, state: &GraphState, grid: &HemisphereGrid) -> Option<String> {
        for k in 0..grid.node_count() {
            let (i, _) = grid.split(k);
            let u = state.u[k];
            if u > self.upper[i] + self.slack || u < self.lower[i] - self.slack {
                return Some(format!(
                    "u = {u} leaves the cap shell [{}, {}] at node {k}",
                    self.lower[i], self.upper[i]
                ));
            }
        }
        self.c0_violation(state).or_else(|| self.c1_violation(state, grid))
    }
}

/// The scalar part of a [`RunBracket`]; the profiles follow from the radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketParts {
    pub r1: f64,
    #[serde(with = "crate::io::inf_as_null")]
    pub r2: f64,
    pub c0: Option<(f64, f64)>,
    pub c1: Option<f64>,
    pub slack: f64,
}

/// Run invariants that travel with the state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunGuard {
    pub bracket: Option<Arc<RunBracket>>,
    /// Whether convexity is enforced by step rejection.
    pub convex: bool,
    /// `W_{0,theta}` of the initial state.
    pub w0_initial: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_f: f64,
    pub kappa_min: f64,
    pub xe_nu_min: f64,
    pub w: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub graph: GraphState,
    pub step_index: usize,
    pub dt_last: f64,
    pub diagnostics: Diagnostics,
    pub speed: Vec<f64>,
    pub sample: SurfaceSample,
    pub guard: RunGuard,
    pub rejections: usize,
}

impl FlowState {
    /// Enforces the boundary closure on `graph` and evaluates it. The guard
    /// is left empty; [`FlowState::guarded`] fills it.
    pub fn new(graph: GraphState, config: &FlowConfig) -> Result<Self> {
        config.validate()?;
        if (graph.theta - config.theta).abs() > 1e-15 {
            return Err(CapflowError::invalid(format!(
                "state contact angle {} differs from config angle {}",
                graph.theta, config.theta
            )));
        }
        let graph = enforce_bc(&graph, &config.grid, config.theta)?;
        let sample = reconstruct(&graph, &config.grid)?;
        if let Some(node) = (0..sample.node_count()).find(|&i| !(sample.xe_nu[i] > 0.0)) {
            return Err(CapflowError::StarShapeLost {
                node,
                value: sample.xe_nu[node],
            });
        }
        let speed = graph_speed(&graph, &config.grid, config.mode)?;
        let diagnostics = Diagnostics {
            max_f: max_abs(&speed),
            kappa_min: sample.kappa_min(),
            xe_nu_min: sample.xe_nu_min(),
            w: None,
        };
        Ok(Self {
            graph,
            step_index: 0,
            dt_last: 0.0,
            diagnostics,
            speed,
            sample,
            guard: RunGuard::default(),
            rejections: 0,
        })
    }

    /// Installs the run guard computed from this state: convexity is
    /// enforced if the state is convex, and mct runs get the cap-shell
    /// barrier when the state can be bracketed.
    pub fn guarded(mut self, config: &FlowConfig) -> Result<Self> {
        let w0 = quermass_vector(&self.sample)?.w[0];
        let bracket = match config.mode {
            FlowMode::Mct => RunBracket::new(&self.graph, &config.grid).ok().map(Arc::new),
            FlowMode::Mcf => None,
        };
        self.guard = RunGuard {
            bracket,
            convex: self.diagnostics.kappa_min >= -KAPPA_SLACK,
            w0_initial: Some(w0),
        };
        Ok(self)
    }

    pub fn t(&self) -> f64 {
        self.graph.t
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// The BC-projected version of arbitrary initial data.
pub fn project_initial(state: &GraphState, grid: &HemisphereGrid) -> Result<GraphState> {
    project_bc(state, grid)
}

/// Step size before any rejection: the CFL bound of the explicit scheme,
/// scaled for IMEX.
pub fn nominal_dt(state: &FlowState, config: &FlowConfig) -> f64 {
    if let Some(dt) = config.fixed_dt {
        return dt;
    }
    let grid = &config.grid;
    let grad2 = gradient_norm2(&state.graph, grid);
    let a_max = (0..grid.node_count())
        .map(|k| {
            let (i, _) = grid.split(k);
            let a = state.graph.u[k].cosh() + grid.beta(i).cos();
            let v = (1.0 + grad2[k]).sqrt();
            match config.mode {
                FlowMode::Mct => a / v,
                // F = H v A carries an extra factor A v on the principal part
                FlowMode::Mcf => a * a,
            }
        })
        .fold(0.0, f64::max);
    let h = grid.h_min();
    let mut dt = config.dt_safety * h * h / (2.0 * config.n as f64 * a_max);
    if grid.mode == GridMode::Axisym {
        dt *= AXISYM_STENCIL_FACTOR;
    }
    if config.scheme == Scheme::Imex {
        dt *= config.imex_factor;
    }
    dt
}

/// Linear solver for `(I - gamma dt J) x = b`, with `J` the lagged principal
/// part at the current state.
enum ImplicitSolver {
    Axisym(linear::Banded),
    Full2d(Full2dOperator),
}

impl ImplicitSolver {
    fn new(state: &FlowState, config: &FlowConfig, dt: f64) -> Self {
        let grid = &config.grid;
        let u = &state.graph.u;
        let n = config.n as f64;
        match grid.mode {
            GridMode::Axisym => {
                let (p, _) = crate::surface::stencil::axisym_derivs(u, grid.h_beta(), state.graph.theta);
                let mut c = vec![0.0; grid.n_beta];
                let mut d = vec![0.0; grid.n_beta];
                for i in 0..grid.n_beta {
                    let (sb, cb) = grid.beta(i).sin_cos();
                    let a = u[i].cosh() + cb;
                    let v = (1.0 + p[i] * p[i]).sqrt();
                    let scale = match config.mode {
                        FlowMode::Mct => 1.0,
                        FlowMode::Mcf => a * v,
                    };
                    if i == 0 {
                        c[i] = scale * n * a;
                    } else {
                        c[i] = scale * a / (v * v * v);
                        d[i] = scale * (n - 1.0) * cb / sb * a / v;
                    }
                }
                ImplicitSolver::Axisym(axisym_implicit_matrix(&c, &d, grid.h_beta(), dt))
            }
            GridMode::Full2d => {
                let jets = crate::surface::stencil::full2d_jets(u, grid, state.graph.theta);
                let mcf = config.mode == FlowMode::Mcf;
                let coef = jets
                    .iter()
                    .map(|jet| {
                        let a0 = jet.u.v.cosh();
                        match jet.chart {
                            crate::surface::stencil::Chart::Pole => {
                                let g2 = jet.u.g[0] * jet.u.g[0] + jet.u.g[1] * jet.u.g[1];
                                let (a, v) = (a0 + 1.0, (1.0 + g2).sqrt());
                                let scale = if mcf { a * v } else { 1.0 };
                                [scale * a / v, 0.0, 0.0, 0.0, 0.0]
                            }
                            crate::surface::stencil::Chart::Polar { beta, .. } => {
                                let (sb, cb) = beta.sin_cos();
                                let (ub, up) = (jet.u.g[0], jet.u.g[1]);
                                let s2 = sb * sb;
                                let gp = up / s2;
                                let v2 = 1.0 + ub * ub + up * gp;
                                let scale = if mcf { (a0 + cb) * v2.sqrt() } else { 1.0 };
                                let a = scale * (a0 + cb) / v2.sqrt();
                                let cot = cb / sb;
                                [
                                    a * (1.0 - ub * ub / v2),
                                    a * (1.0 / s2 - gp * gp / v2),
                                    -2.0 * a * ub * gp / v2,
                                    a * (cot - gp * gp * sb * cb / v2),
                                    2.0 * a * ub * gp * cot / v2,
                                ]
                            }
                        }
                    })
                    .collect();
                ImplicitSolver::Full2d(Full2dOperator {
                    grid: *grid,
                    dt,
                    coef,
                })
            }
        }
    }

    fn solve(&self, b: Vec<f64>) -> std::result::Result<Vec<f64>, String> {
        match self {
            ImplicitSolver::Axisym(m) => m.clone().solve(b).ok_or_else(|| "singular implicit matrix".to_string()),
            ImplicitSolver::Full2d(op) => op
                .solve(&b, 1e-12, 2000)
                .ok_or_else(|| "implicit solve did not converge".to_string()),
        }
    }
}

/// Diagonal coefficient of the two-stage W-method.
const ROS2_GAMMA: f64 = 1.0 + std::f64::consts::FRAC_1_SQRT_2;

/// Increment of one step: `dt F` for the explicit scheme; for IMEX the
/// two-stage linearly implicit W-method
/// `(I - g dt J) d1 = dt F(u)`, `(I - g dt J) d2 = dt F(u + d1) - 2 d1`,
/// `u + 3/2 d1 + 1/2 d2`, second order in time for any lagged `J`.
fn increment(state: &FlowState, config: &FlowConfig, dt: f64) -> std::result::Result<Vec<f64>, String> {
    let rhs: Vec<f64> = state.speed.iter().map(|f| dt * f).collect();
    if config.scheme == Scheme::ExplicitEuler {
        return Ok(rhs);
    }
    let grid = &config.grid;
    let solver = ImplicitSolver::new(state, config, ROS2_GAMMA * dt);
    let d1 = solver.solve(rhs)?;
    let mut mid = state.graph.clone();
    mid.u.iter_mut().zip(&d1).for_each(|(u, d)| *u += d);
    if mid.u.iter().any(|v| !v.is_finite()) {
        return Err("non-finite stage values".into());
    }
    let mid = enforce_bc(&mid, grid, config.theta).map_err(|e| e.to_string())?;
    let f_mid = graph_speed(&mid, grid, config.mode).map_err(|e| e.to_string())?;
    let b2: Vec<f64> = f_mid.iter().zip(&d1).map(|(f, d)| dt * f - 2.0 * d).collect();
    let d2 = solver.solve(b2)?;
    Ok(d1.iter().zip(&d2).map(|(a, b)| 1.5 * a + 0.5 * b).collect())
}

/// One accepted step, halving `dt` on rejection.
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    let grid = &config.grid;
    let dt0 = nominal_dt(state, config);
    let mut reason = String::new();
    for attempt in 0..=MAX_REJECTIONS {
        let dt = dt0 / f64::powi(2.0, attempt as i32);
        let delta = match increment(state, config, dt) {
            Ok(d) => d,
            Err(e) => {
                reason = e;
                continue;
            }
        };
        let mut graph = state.graph.clone();
        graph.u.iter_mut().zip(&delta).for_each(|(u, d)| *u += d);
        graph.t = state.graph.t + dt;
        if graph.u.iter().any(|v| !v.is_finite()) {
            reason = "non-finite graph values".into();
            continue;
        }
        let graph = enforce_bc(&graph, grid, config.theta)?;
        let sample = match reconstruct(&graph, grid) {
            Ok(s) => s,
            Err(e) => {
                reason = e.to_string();
                continue;
            }
        };
        if let Some(node) = (0..sample.node_count()).find(|&i| !(sample.xe_nu[i] > 0.0)) {
            return Err(CapflowError::StarShapeLost {
                node,
                value: sample.xe_nu[node],
            });
        }
        let kappa_min = sample.kappa_min();
        if state.guard.convex && kappa_min < -KAPPA_SLACK {
            reason = format!("convexity lost (kappa_min = {kappa_min:e})");
            continue;
        }
        if let Some(v) = state.guard.bracket.as_ref().and_then(|b| b.violation(&graph, grid)) {
            reason = v;
            continue;
        }
        let speed = graph_speed(&graph, grid, config.mode)?;
        let diagnostics = Diagnostics {
            max_f: max_abs(&speed),
            kappa_min,
            xe_nu_min: sample.xe_nu_min(),
            w: None,
        };
        return Ok(FlowState {
            graph,
            step_index: state.step_index + 1,
            dt_last: dt,
            diagnostics,
            speed,
            sample,
            guard: state.guard.clone(),
            rejections: state.rejections + attempt,
        });
    }
    Err(CapflowError::StepFailure {
        attempts: MAX_REJECTIONS,
        reason,
    })
}

/// Least-squares factor `c` in `F rho e^w / v = c f` over the interior
/// nodes; `None` when `f` is negligible.
pub fn fitted_speed_factor(state: &FlowState, config: &FlowConfig) -> Option<f64> {
    let grid = &config.grid;
    let fac = speed_factor(&state.graph, grid);
    let f = normal_speed(&state.sample, config.mode);
    let (mut num, mut den) = (0.0, 0.0);
    for k in grid.n_xi..grid.node_count() - grid.n_xi {
        num += state.speed[k] * fac[k] * f[k];
        den += f[k] * f[k];
    }
    let count = (grid.node_count() - 2 * grid.n_xi) as f64;
    (den / count > 1e-12).then(|| num / den)
}

/// `d W_1 / dt` predicted by the variational formula: for mct this is
/// `n^2/(n+1) int (H_2 - H_1^2) <X_e, nu>`, for mcf `n/(n+1) int H_1 f`.
pub fn dissipation(sample: &SurfaceSample, mode: FlowMode) -> f64 {
    let n = sample.n() as f64;
    match mode {
        FlowMode::Mct => {
            n * n / (n + 1.0)
                * sample.integrate(|i| {
                    let h1 = sample.h(1, i);
                    (sample.h(2, i) - h1 * h1) * sample.xe_nu[i]
                })
        }
        FlowMode::Mcf => {
            -n * n / (n + 1.0)
                * sample.integrate(|i| {
                    let h1 = sample.h(1, i);
                    h1 * h1
                })
        }
    }
}

fn cap_distance(state: &GraphState, grid: &HemisphereGrid, r: f64) -> Result<f64> {
    let cap = cap_graph(&CapParams::new(state.theta, r, grid.n)?, grid);
    Ok(state.u.iter().zip(&cap.u).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

fn monitor_row(state: &FlowState, config: &FlowConfig, r_inf: Option<f64>) -> Result<TrajectoryRow> {
    let w = quermass_vector(&state.sample)?.w;
    let dist_to_cap = match r_inf {
        Some(r) => cap_distance(&state.graph, &config.grid, r)?,
        None => f64::NAN,
    };
    Ok(TrajectoryRow {
        step: state.step_index,
        t: state.graph.t,
        dt: state.dt_last,
        max_f: state.diagnostics.max_f,
        kappa_min: state.diagnostics.kappa_min,
        w,
        dist_to_cap,
        dissipation: Some(dissipation(&state.sample, config.mode)),
    })
}

/// Runs the flow from `initial` (BC closure applied, guard computed).
pub fn run(config: &FlowConfig, initial: GraphState) -> Result<TrajectoryRecord> {
    let start = FlowState::new(initial, config)?.guarded(config)?;
    run_from(config, start, |_, _| {})
}

/// Continues a run from `start`. `observer` sees every accepted state and
/// the record so far.
pub fn run_from(
    config: &FlowConfig,
    start: FlowState,
    mut observer: impl FnMut(&FlowState, &TrajectoryRecord),
) -> Result<TrajectoryRecord> {
    config.validate()?;
    let mut state = start;
    let n = config.n;
    let r_inf = state
        .guard
        .w0_initial
        .and_then(|w0| cap_radius_from_quermass(config.theta, n, 0, w0).ok());
    let mut record = TrajectoryRecord {
        config_hash: config.hash(),
        sign_convention: Some(resolved_sign()),
        fitted_factor: fitted_speed_factor(&state, config),
        r_inf,
        kappa_inf: state.diagnostics.kappa_min,
        ..Default::default()
    };
    record.rows.push(monitor_row(&state, config, r_inf)?);
    observer(&state, &record);
    let mut converged = false;
    loop {
        if state.diagnostics.max_f < config.stop_tol {
            converged = true;
            break;
        }
        if let Some(m) = config.max_steps {
            if state.step_index >= m {
                break;
            }
        }
        if state.graph.t >= config.t_max {
            finish(&mut record, &state, config, false, r_inf)?;
            return Err(CapflowError::NotConverged {
                t_max: config.t_max,
                max_f: state.diagnostics.max_f,
                trajectory: Box::new(record),
            });
        }
        state = step(&state, config)?;
        record.kappa_inf = record.kappa_inf.min(state.diagnostics.kappa_min);
        if state.step_index % config.monitor_every == 0 {
            record.rows.push(monitor_row(&state, config, r_inf)?);
        }
        observer(&state, &record);
    }
    finish(&mut record, &state, config, converged, r_inf)?;
    Ok(record)
}

fn finish(
    record: &mut TrajectoryRecord,
    state: &FlowState,
    config: &FlowConfig,
    converged: bool,
    r_inf: Option<f64>,
) -> Result<()> {
    if record.rows.last().map(|r| r.step) != Some(state.step_index) {
        record.rows.push(monitor_row(state, config, r_inf)?);
    }
    record.final_u = state.graph.u.clone();
    record.final_t = state.graph.t;
    record.converged = converged;
    record.steps = state.step_index;
    record.rejections = state.rejections;
    record.final_dist_to_cap = match r_inf {
        Some(r) => Some(cap_distance(&state.graph, &config.grid, r)?),
        None => None,
    };
    Ok(())
}
