//! Deterministic FSYNC simulator and verifier for gathering a closed chain of
//! disoriented luminous robots with a viewing range of four chain neighbours.

pub mod chain;
pub mod engine;
pub mod generators;
pub mod geometry;
pub mod io;
pub mod moves;
pub mod patterns;
pub mod tolerance;
pub mod verify;

pub use chain::{build_chain, ChainConfiguration, LocalView, RobotId, RobotLights, RunToken};
pub use engine::{Outcome, Settings, SimulationState};
pub use geometry::{Circle, OrientedAngle, PlaneVector, Point2};
pub use tolerance::Tolerances;
