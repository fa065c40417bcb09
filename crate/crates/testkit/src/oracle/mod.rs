//! Independent straight-line oracles, one per checked subsystem.

pub mod ap;
pub mod feedback;
pub mod fusion;
pub mod metrics;
pub mod queue;
