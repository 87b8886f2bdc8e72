use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cap::{cap_graph, CapParams};
use crate::error::{CapflowError, Result};
use crate::flow::{step, FlowConfig, FlowMode, FlowState};
use crate::surface::{project_bc, reconstruct, GraphState, GridMode, HemisphereGrid, SurfaceSample};

/// Largest sup amplitude of a random perturbation.
pub const MAX_AMPLITUDE: f64 = 0.15;
const MODES: usize = 3;
const MAX_ATTEMPTS: usize = 200;
/// Grid on which draws are screened for convexity.
const SCREEN_N_BETA: usize = 96;
/// Screened draws have `kappa_min >= SCREEN_MARGIN / radius` before
/// smoothing, so they are convex on every grid.
const SCREEN_MARGIN: f64 = 0.05;

/// Grid-independent parameters of a random perturbed cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomDraw {
    pub seed: u64,
    pub index: usize,
    pub theta: f64,
    pub radius: f64,
    /// Coefficients of `cos(2 m beta)`, `m = 1..=3`, scaled to `amplitude`.
    pub coeffs: Vec<f64>,
    /// Coefficients of `sin^2(beta) cos(xi)` and `sin^2(beta) sin(xi)`,
    /// used on full 2-D grids only.
    pub tilt: [f64; 2],
    pub amplitude: f64,
    pub smoothing_steps: usize,
}

fn radial(coeffs: &[f64], beta: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| c * (2.0 * (m + 1) as f64 * beta).cos())
        .sum()
}

impl RandomDraw {
    fn draw(rng: &mut ChaCha8Rng, seed: u64, index: usize, theta: f64, shrink: f64) -> Self {
        let radius = (rng.random_range(0.6f64.ln()..2.0f64.ln())).exp();
        let mut coeffs: Vec<f64> = (0..MODES).map(|m| rng.random_range(-1.0..1.0) / (1 + m) as f64).collect();
        let tilt = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let amplitude = rng.random_range(0.2..1.0) * MAX_AMPLITUDE * shrink;
        let sup = (0..=1024)
            .map(|i| radial(&coeffs, i as f64 * std::f64::consts::FRAC_PI_2 / 1024.0).abs())
            .fold(0.0, f64::max);
        coeffs.iter_mut().for_each(|c| *c *= amplitude / sup);
        let tilt = tilt.map(|c| c * 0.5 * amplitude);
        let smoothing_steps = rng.random_range(10..=50);
        Self {
            seed,
            index,
            theta,
            radius,
            coeffs,
            tilt,
            amplitude,
            smoothing_steps,
        }
    }

    /// The BC-projected perturbed cap on `grid`, before smoothing.
    pub fn initial(&self, grid: &HemisphereGrid) -> Result<GraphState> {
        let mut s = cap_graph(&CapParams::new(self.theta, self.radius, grid.n)?, grid);
        for k in 0..grid.node_count() {
            let (i, j) = grid.split(k);
            let b = grid.beta(i);
            s.u[k] += radial(&self.coeffs, b);
            if grid.mode == GridMode::Full2d {
                let (sx, cx) = grid.xi(j).sin_cos();
                s.u[k] += b.sin().powi(2) * (self.tilt[0] * cx + self.tilt[1] * sx);
            }
        }
        project_bc(&s, grid)
    }

    /// Smoothed sample on `grid`; `None` if it is not strictly convex there.
    pub fn realize(&self, grid: &HemisphereGrid) -> Result<Option<(GraphState, SurfaceSample)>> {
        let cfg = FlowConfig::new(FlowMode::Mcf, self.theta, *grid);
        let mut state = match FlowState::new(self.initial(grid)?, &cfg) {
            Ok(s) => s,
            Err(CapflowError::StarShapeLost { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        for _ in 0..self.smoothing_steps {
            state = match step(&state, &cfg) {
                Ok(s) => s,
                Err(e) if e.is_numerical() => return Ok(None),
                Err(e) => return Err(e),
            };
        }
        if state.sample.kappa_min() > 0.0 {
            let mut graph = state.graph;
            graph.t = 0.0;
            Ok(Some((graph, state.sample)))
        } else {
            Ok(None)
        }
    }
}

/// Draw `index` of stream `seed`, screened for convexity on a reference
/// grid. Rejected draws shrink the amplitude of the next attempt.
pub fn random_draw(theta: f64, n: usize, seed: u64, index: usize) -> Result<RandomDraw> {
    crate::cap::validate_theta(theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let screen = HemisphereGrid::axisym(n, SCREEN_N_BETA)?;
    let mut shrink = 1.0;
    for _ in 0..MAX_ATTEMPTS {
        let d = RandomDraw::draw(&mut rng, seed, index, theta, shrink);
        let unsmoothed = match reconstruct(&d.initial(&screen)?, &screen) {
            Ok(s) => s,
            Err(e) if e.is_numerical() => continue,
            Err(e) => return Err(e),
        };
        if unsmoothed.kappa_min() >= SCREEN_MARGIN / d.radius && unsmoothed.xe_nu_min() > 0.0 {
            return Ok(d);
        }
        shrink *= 0.9;
    }
    Err(CapflowError::invalid(format!("no convex draw found for sample {index} of seed {seed}")))
}

/// A screened random convex sample realized on `grid`.
#[derive(Clone, Debug)]
pub struct RandomSample {
    pub draw: RandomDraw,
    pub state: GraphState,
    pub sample: SurfaceSample,
}

/// `count` random convex samples on `grid`, in index order. Samples whose
/// realization on `grid` is not strictly convex are an error.
pub fn random_convex_samples(theta: f64, grid: &HemisphereGrid, count: usize, seed: u64) -> Result<Vec<RandomSample>> {
    let indices: Vec<usize> = (0..count).collect();
    crate::par::map_tasks(&indices, |_, &i| -> Result<RandomSample> {
        let draw = random_draw(theta, grid.n, seed, i)?;
        let (state, sample) = draw.realize(grid)?.ok_or_else(|| {
            CapflowError::invalid(format!("sample {i} of seed {seed} is not convex on {}", grid.label()))
        })?;
        Ok(RandomSample { draw, state, sample })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::bc_residual;

    #[test]
    fn draws_are_deterministic_and_distinct() {
        let a = random_draw(1.0, 2, 7, 3).unwrap();
        let b = random_draw(1.0, 2, 7, 3).unwrap();
        let c = random_draw(1.0, 2, 7, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.amplitude <= MAX_AMPLITUDE && (10..=50).contains(&a.smoothing_steps));
    }

    #[test]
    fn samples_are_convex_and_meet_the_boundary_condition() {
        let grid = HemisphereGrid::axisym(2, 64).unwrap();
        for s in random_convex_samples(std::f64::consts::FRAC_PI_2, &grid, 4, 11).unwrap() {
            assert!(s.sample.kappa_min() > 0.0);
            assert!(bc_residual(&s.draw.initial(&grid).unwrap(), &grid) < 1e-10);
            assert!(s.sample.xe_nu_min() > 0.0);
        }
    }

    #[test]
    fn full2d_draw_is_not_axisymmetric() {
        let d = random_draw(1.2, 2, 3, 0).unwrap();
        let grid = HemisphereGrid::full2d(17, 8).unwrap();
        let s = d.initial(&grid).unwrap();
        let ring: Vec<f64> = (0..8).map(|j| s.u[grid.node(8, j)]).collect();
        assert!(ring.iter().fold(0.0f64, |m, x| m.max((x - ring[0]).abs())) > 1e-6);
    }
}
