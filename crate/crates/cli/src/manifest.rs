use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use capflow::flow::FlowConfig;
use capflow::verify::random_draw;
use capflow::{CapflowError, GraphState, HemisphereGrid, InitialShape};

use crate::FlowArgs;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Initial {
    Cap { radius: f64 },
    Flat,
    PerturbedCap { radius: f64, amplitude: f64, wavenumber: u32 },
    /// Draw `index` of the random convex family for the manifest seed.
    Random { index: usize },
    File { path: PathBuf },
}

impl Initial {
    fn shape(&self) -> Option<InitialShape> {
        match *self {
            Initial::Cap { radius } => Some(InitialShape::Cap { radius }),
            Initial::Flat => Some(InitialShape::Flat),
            Initial::PerturbedCap {
                radius,
                amplitude,
                wavenumber,
            } => Some(InitialShape::PerturbedCap {
                radius,
                amplitude,
                wavenumber,
            }),
            _ => None,
        }
    }
}

/// Everything that determines a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: FlowConfig,
    pub initial: Initial,
    pub seed: u64,
    pub checkpoint_every: usize,
    /// Written for reference; recomputed from `config` on load.
    #[serde(default)]
    pub config_hash: String,
}

impl RunManifest {
    pub fn validate(&self) -> capflow::Result<()> {
        self.config.validate()?;
        if self.checkpoint_every == 0 {
            return Err(CapflowError::invalid("checkpoint_every must be >= 1"));
        }
        if let Some(shape) = self.initial.shape() {
            shape.validate()?;
        }
        if let Initial::File { path } = &self.initial {
            if !path.is_file() {
                return Err(CapflowError::invalid(format!("initial file {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> anyhow::Result<GraphState> {
        let grid = &self.config.grid;
        let theta = self.config.theta;
        if let Some(shape) = self.initial.shape() {
            return Ok(shape.build(theta, grid)?);
        }
        match &self.initial {
            Initial::Random { index } => Ok(random_draw(theta, grid.n, self.seed, *index)?.initial(grid)?),
            Initial::File { path } => {
                let snap = Snapshot::load(path)?;
                if snap.grid != *grid || snap.theta != theta {
                    return Err(CapflowError::invalid(format!(
                        "snapshot {} has grid {} and theta {}, the run uses {} and {theta}",
                        path.display(),
                        snap.grid.label(),
                        snap.theta,
                        grid.label()
                    ))
                    .into());
                }
                Ok(snap.state())
            }
            _ => unreachable!(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut m: Self = serde_json::from_str(&text)
            .map_err(|e| CapflowError::invalid(format!("manifest {}: {e}", path.display())))?;
        m.config_hash = m.config.hash();
        Ok(m)
    }
}

pub fn config_from_args(a: &FlowArgs) -> capflow::Result<FlowConfig> {
    let grid = HemisphereGrid::parse(&a.grid, a.n)?;
    let mut cfg = FlowConfig::new(a.mode.into(), a.theta, grid);
    cfg.scheme = a.scheme.into();
    cfg.t_max = a.tmax;
    cfg.stop_tol = a.stop_tol;
    cfg.monitor_every = a.monitor_every;
    cfg.fixed_dt = a.fixed_dt;
    cfg.max_steps = a.max_steps;
    cfg.validate()?;
    Ok(cfg)
}

/// A graph on a grid. Checkpoints are snapshots too.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub theta: f64,
    pub grid: HemisphereGrid,
    pub u: Vec<f64>,
    #[serde(default)]
    pub t: f64,
}

impl Snapshot {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let snap: Self = serde_json::from_str(&text)
            .map_err(|e| CapflowError::invalid(format!("snapshot {}: {e}", path.display())))?;
        capflow::cap::validate_theta(snap.theta)?;
        HemisphereGrid::new(snap.grid.mode, snap.grid.n, snap.grid.n_beta, snap.grid.n_xi)?;
        if snap.u.len() != snap.grid.node_count() || snap.u.iter().any(|v| !v.is_finite()) {
            return Err(CapflowError::invalid(format!(
                "snapshot {}: expected {} finite graph values, found {}",
                path.display(),
                snap.grid.node_count(),
                snap.u.len()
            ))
            .into());
        }
        Ok(snap)
    }

    pub fn state(&self) -> GraphState {
        let mut s = GraphState::new(self.u.clone(), self.theta);
        s.t = self.t;
        s
    }
}
