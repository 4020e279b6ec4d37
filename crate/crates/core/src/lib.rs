//! Contextual tensor bandits for budgeted influence maximization.
//!
//! A mean-field variational posterior over the CP factors of a
//! susceptibility tensor scores every edge of a social graph; a UCB bonus
//! turns the predictive distribution into optimistic activation
//! probabilities; a lazy-greedy oracle picks seeds; and a synthetic
//! environment returns edge-level Bernoulli feedback.

pub mod error;
pub mod features;
pub mod harness;
pub mod im_graph;
pub mod policy;
pub mod rng;
pub mod seed_oracle;
pub mod synth_env;
pub mod tensor_model;

pub use error::{Error, Result};
