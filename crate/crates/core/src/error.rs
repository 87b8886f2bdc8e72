use thiserror::Error;

use crate::trajectory::TrajectoryRecord;

pub type Result<T> = std::result::Result<T, CapflowError>;

#[derive(Debug, Error)]
pub enum CapflowError {
    #[error("point {0:?} is within tolerance of the pole e where the Moebius map is singular")]
    SingularPoint(Vec<f64>),

    #[error("cap radius is infinite; use the flat-ball representation")]
    InfiniteRadius,

    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    QuadratureFailure { tol: f64, estimate: f64 },

    #[error("value {value} outside the attainable range ({lo}, {hi})")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("induced metric degenerate at node {node} (det = {det:e})")]
    DegenerateMetric { node: usize, det: f64 },

    #[error("contact angle {0} outside (0, pi/2]")]
    ObliquenessViolated(f64),

    #[error("step rejected {attempts} times: {reason}")]
    StepFailure { attempts: usize, reason: String },

    #[error("star-shapedness lost: <X_e, nu> = {value:e} at node {node}")]
    StarShapeLost { node: usize, value: f64 },

    #[error("flow did not converge before t_max = {t_max} (max|F| = {max_f:e})")]
    NotConverged {
        t_max: f64,
        max_f: f64,
        trajectory: Box<TrajectoryRecord>,
    },

    #[error("sample is not contained in the cap shell: {0}")]
    ShellViolation(String),

    #[error("observed convergence order {order:.3} for {quantity} is below {threshold}")]
    OrderRegression {
        quantity: String,
        order: f64,
        threshold: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid checkpoint: field `{field}`: {reason}")]
    InvalidCheckpoint { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CapflowError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CapflowError::InvalidInput(msg.into())
    }

    /// True for failures of the numerical scheme itself, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CapflowError::QuadratureFailure { .. }
                | CapflowError::DegenerateMetric { .. }
                | CapflowError::StepFailure { .. }
                | CapflowError::StarShapeLost { .. }
                | CapflowError::OrderRegression { .. }
        )
    }
}
