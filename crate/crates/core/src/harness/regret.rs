use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::im_graph::{exact_spread, mc_spread, EdgeProbabilities, NodeId, SocialGraph, MAX_ENUMERABLE_EDGES};
use crate::seed_oracle::{greedy_seeds, greedy_seeds_exact};
use crate::synth_env::GroundTruthModel;

/// Regret after one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretPoint {
    /// `(1/η)(f(S*_t, P*) − f(S_t, P*))`, floored at zero.
    pub instant: f64,
    pub cumulative: f64,
    /// `R_t^η / t`.
    pub average: f64,
}

/// Running η-scaled regret from per-round `(optimum, achieved)` spreads.
///
/// A round where the played set matches or beats the reference optimum
/// contributes zero.
pub fn regret_series(spreads: &[(f64, f64)], eta: f64) -> Vec<RegretPoint> {
    let mut cumulative = 0.0;
    spreads
        .iter()
        .enumerate()
        .map(|(t, &(opt, got))| {
            let instant = (opt - got).max(0.0) / eta;
            cumulative += instant;
            RegretPoint { instant, cumulative, average: cumulative / (t + 1) as f64 }
        })
        .collect()
}

/// Scores seed sets against the ground truth, caching `S*` per product.
pub struct RegretEvaluator<'a> {
    graph: &'a SocialGraph,
    env: &'a GroundTruthModel,
    budget: usize,
    oracle_sims: usize,
    regret_sims: usize,
    root_seed: u64,
    truth: HashMap<usize, EdgeProbabilities>,
    optimum: HashMap<usize, Vec<NodeId>>,
}

impl<'a> RegretEvaluator<'a> {
    pub fn new(
        graph: &'a SocialGraph,
        env: &'a GroundTruthModel,
        budget: usize,
        oracle_sims: usize,
        regret_sims: usize,
        root_seed: u64,
    ) -> Self {
        Self { graph, env, budget, oracle_sims, regret_sims, root_seed, truth: HashMap::new(), optimum: HashMap::new() }
    }

    fn enumerable(&self) -> bool {
        self.graph.edge_count() <= MAX_ENUMERABLE_EDGES && self.graph.node_count() <= 128
    }

    pub fn truth(&mut self, product: usize) -> Result<&EdgeProbabilities> {
        if !self.truth.contains_key(&product) {
            let p = self.env.edge_probabilities(self.graph, product)?;
            self.truth.insert(product, p);
        }
        Ok(&self.truth[&product])
    }

    /// `S*` for `product`: greedy on the true probabilities.
    pub fn optimum(&mut self, product: usize) -> Result<Vec<NodeId>> {
        if let Some(s) = self.optimum.get(&product) {
            return Ok(s.clone());
        }
        let enumerable = self.enumerable();
        let (budget, sims, seed) = (self.budget, self.oracle_sims, crate::rng::derive_seed(self.root_seed, &[product as u64]));
        let graph = self.graph;
        let probs = self.truth(product)?;
        let seeds = if enumerable {
            greedy_seeds_exact(graph, probs, budget)?
        } else {
            greedy_seeds(graph, probs, budget, sims, seed)?
        };
        self.optimum.insert(product, seeds.clone());
        Ok(seeds)
    }

    /// `f(S, P*)`: exact on enumerable graphs, otherwise Monte Carlo with
    /// streams keyed by `eval_seed`.
    pub fn spread(&mut self, product: usize, seeds: &[NodeId], eval_seed: u64) -> Result<f64> {
        let enumerable = self.enumerable();
        let sims = self.regret_sims;
        let graph = self.graph;
        let probs = self.truth(product)?;
        if enumerable {
            exact_spread(graph, probs, seeds)
        } else {
            Ok(mc_spread(graph, probs, seeds, sims, eval_seed)?.mean)
        }
    }

    /// `(f(S*, P*), f(S, P*))` on common random numbers.
    pub fn spreads(&mut self, product: usize, seeds: &[NodeId], eval_seed: u64) -> Result<(f64, f64)> {
        let opt = self.optimum(product)?;
        let best = self.spread(product, &opt, eval_seed)?;
        let got = if opt == seeds { best } else { self.spread(product, seeds, eval_seed)? };
        Ok((best, got))
    }
}
