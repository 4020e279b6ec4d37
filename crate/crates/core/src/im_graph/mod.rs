//! Social graph and independent-cascade spread evaluation.

mod cascade;
mod graph;

pub use cascade::{
    exact_spread, mc_spread, simulate_cascade, CascadeOutcome, ExactSpreadTable, SpreadEstimate,
    MAX_ENUMERABLE_EDGES,
};
pub use graph::{load_graph, EdgeId, EdgeProbabilities, LoadReport, NodeId, SocialGraph};
