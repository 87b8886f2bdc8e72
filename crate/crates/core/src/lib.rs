//! Simulation and verification of the volume-preserving mean curvature type
//! flow of convex capillary hypersurfaces in the unit Euclidean ball.
//!
//! Hypersurfaces are stored as graphs `u` over the upper hemisphere of the
//! half-space picture obtained from the Moebius map fixing the pole `e`.

pub mod cap;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod initial;
pub mod io;
pub mod jet;
pub mod par;
pub mod quad;
pub mod quermass;
pub mod surface;
pub mod trajectory;
pub mod verify;

pub use cap::{cap_graph, cap_quermass, cap_radius_from_quermass, CapParams};
pub use error::{CapflowError, Result};
pub use initial::{perturbed_cap, InitialShape};
pub use geometry::{moebius, moebius_inverse, BallPoint, Direction, HalfSpacePolar};
pub use quermass::{minkowski_residual, quermass_theta, quermass_vector, BoundarySign, QuermassVector};
pub use surface::{reconstruct, GraphState, GridMode, HemisphereGrid, SurfaceSample};
pub use trajectory::{TrajectoryRecord, TrajectoryRow};
