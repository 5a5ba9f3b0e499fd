//! Policies, search and self-play training.

pub mod discovery;
pub mod mcts;
pub mod policy;
pub mod selfplay;
pub mod train;

pub use mcts::{Budget, FinalMove, Mcts, MctsConfig, SearchResult};
pub use policy::{softmax, LinearPolicy};
pub use selfplay::{self_play, EpisodeStats, SelfPlayConfig, Trained};
pub use train::{ReplayBuffer, Sample, TrainConfig};
