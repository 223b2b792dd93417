//! Degrees-of-freedom bounds and signal-alignment synthesis for K-user MIMO
//! Y channels: every user has `M` antennas, a single relay has `N`, and
//! each user sends an independent message to every other user through the
//! relay.

pub mod channel;
pub mod cli;
pub mod config;
pub mod dof_bounds;
pub mod error;
pub mod gsa;
pub mod linalg;
pub mod relay;
pub mod rational;
pub mod rng;
pub mod sweep;
pub mod wire;

pub use config::SystemConfig;
pub use error::{Error, Result, Stage};
pub use rational::RationalDof;
