//! Strategic-personalization simulation engine: a Bayesian game between a
//! content sender and typed physician agents, with belief tracking,
//! information-theoretic diagnostics, compositional checks and replicator
//! population dynamics.

pub mod belief;
pub mod cli;
pub mod compose;
pub mod defaults;
pub mod error;
pub mod game;
pub mod info;
pub mod population;
pub mod scenarios;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
pub use types::{Belief, GameSpec, PayoffTensor, TypeSet, TypeVector};
