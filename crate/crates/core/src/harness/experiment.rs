//! Multi-seed comparisons between agents.

use super::campaign::Campaign;
use super::config::{AgentKind, CampaignConfig};
use crate::error::Result;

/// Runs `cfg` with `agent` (and optionally a UCB multiplier and rank) and
/// returns the final average regret `R_T^η / T`.
pub fn final_average_regret(base: &CampaignConfig, agent: AgentKind, c: Option<f64>, rank: Option<usize>) -> Result<f64> {
    let mut cfg = base.clone();
    cfg.agent = agent;
    if let Some(c) = c {
        cfg.ucb_c = c;
    }
    if let Some(r) = rank {
        cfg.rank = r;
    }
    let logs = Campaign::build(cfg)?.run()?;
    Ok(logs.last().map_or(0.0, |l| l.avg_regret))
}

/// Picks the multiplier from `grid` with the lowest final average regret
/// over `validation_rounds` rounds (first on ties).
pub fn select_ucb_c(
    base: &CampaignConfig,
    agent: AgentKind,
    rank: Option<usize>,
    grid: &[f64],
    validation_rounds: usize,
) -> Result<(f64, Vec<f64>)> {
    let cfg = CampaignConfig { rounds: validation_rounds, ..base.clone() };
    let scores = grid
        .iter()
        .map(|&c| final_average_regret(&cfg, agent, Some(c), rank))
        .collect::<Result<Vec<f64>>>()?;
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |best, (i, &s)| if s < scores[best] { i } else { best });
    Ok((grid[best], scores))
}

/// Mean and standard error of `a[i] − b[i]`.
pub fn paired_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    if a.len() < 2 {
        return (mean, 0.0);
    }
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Greedy-versus-exhaustive comparison on one enumerable instance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleCheck {
    pub nodes: usize,
    pub edges: usize,
    pub budget: usize,
    pub optimum: f64,
    pub greedy_exact: f64,
    pub greedy_mc: f64,
}

impl OracleCheck {
    pub fn exact_ratio(&self) -> f64 {
        self.greedy_exact / self.optimum
    }

    pub fn mc_ratio(&self) -> f64 {
        self.greedy_mc / self.optimum
    }
}

/// Random graph with at most `max_nodes` nodes and `max_edges` edges and
/// edge probabilities uniform in `[0.05, 0.95]`.
pub fn random_enumerable_instance(
    seed: u64,
    max_nodes: usize,
    max_edges: usize,
) -> Result<(crate::im_graph::SocialGraph, crate::im_graph::EdgeProbabilities)> {
    use rand::Rng;
    let mut r = crate::rng::stream(seed, 0);
    let n = r.random_range(3..=max_nodes.max(3));
    let target = r.random_range(n.min(max_edges)..=max_edges.min(n * (n - 1)));
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut edges = Vec::with_capacity(target);
    while edges.len() < target {
        let k = r.random_range(0..pairs.len());
        edges.push(pairs.swap_remove(k));
    }
    let graph = crate::im_graph::SocialGraph::new(n, edges)?;
    let probs = (0..graph.edge_count()).map(|_| r.random_range(0.05..0.95)).collect();
    let probs = crate::im_graph::EdgeProbabilities::new(&graph, probs)?;
    Ok((graph, probs))
}

/// Scores exact-greedy, MC-greedy and exhaustive seeds on one instance.
pub fn oracle_check(
    graph: &crate::im_graph::SocialGraph,
    probs: &crate::im_graph::EdgeProbabilities,
    budget: usize,
    mc_sims: usize,
    seed: u64,
) -> Result<OracleCheck> {
    use crate::im_graph::ExactSpreadTable;
    use crate::seed_oracle::{exhaustive_seeds, greedy_seeds, greedy_seeds_exact};
    let table = ExactSpreadTable::new(graph, probs)?;
    let (_, optimum) = exhaustive_seeds(graph, probs, budget)?;
    let greedy_exact = table.spread(&greedy_seeds_exact(graph, probs, budget)?);
    let greedy_mc = table.spread(&greedy_seeds(graph, probs, budget, mc_sims, seed)?);
    Ok(OracleCheck { nodes: graph.node_count(), edges: graph.edge_count(), budget, optimum, greedy_exact, greedy_mc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_stats() {
        let (m, se) = paired_difference(&[3.0, 5.0, 7.0], &[1.0, 2.0, 3.0]);
        assert_eq!(m, 3.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(paired_difference(&[1.0], &[0.5]), (0.5, 0.0));
    }
}
