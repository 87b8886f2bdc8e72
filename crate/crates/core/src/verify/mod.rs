//! Checks of the geometric inequalities and identities on samples and trajectories.

mod af;
mod boundary;
mod estimates;
mod order;
mod random;
mod trajectory;

pub use af::{
    af_check, calibrate, calibrate_tol_disc, cap_with_volume, CapCalibration, CALIBRATION_FACTOR, CALIBRATION_RADII,
    FLAT_CLAMP,
};
pub use boundary::{boundary_report, BoundaryReport};
pub use estimates::{estimates_check, EstimateBundle, EstimateReport};
pub use order::{
    consistency_suite, refinement_widths, ConsistencyReport, OrderRow, NOISE_FLOOR, ORDER_FLOOR, ORDER_TARGET,
};
pub use random::{random_convex_samples, random_draw, RandomDraw, RandomSample, MAX_AMPLITUDE};
pub use trajectory::{
    convergence_check, dissipation_check, monotonicity_report, ConvergenceReport, DissipationCheck,
    MonotonicityReport, MONOTONE_SLACK,
};
