//! Spatial state-action features for board games, with interchangeable
//! evaluation backends, a feature-guided MCTS agent and benchmark tools.

pub mod agents;
pub mod backends;
pub mod bench;
pub mod error;
pub mod features;
pub mod games;
pub mod geometry;
pub mod instantiation;
pub mod ordering;
pub mod state;

pub use error::{Error, Result};
