use rand::Rng;

use super::{EdgeId, EdgeProbabilities, NodeId, SocialGraph};
use crate::error::{Error, Result};
use crate::rng;

/// Largest edge count accepted by the exhaustive spread evaluators.
pub const MAX_ENUMERABLE_EDGES: usize = 20;

/// Result of one independent-cascade run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeOutcome {
    /// Activated nodes in activation order (seeds first).
    pub activated: Vec<NodeId>,
    /// Every edge tried, i.e. every out-edge of an activated node, with its coin flip.
    pub edge_trials: Vec<(EdgeId, bool)>,
}

/// Mean and standard error of a Monte-Carlo spread estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Runs one cascade with breadth-first activation rounds.
///
/// Each out-edge of a newly activated node is tried exactly once; the
/// outcome distribution does not depend on the visiting order.
pub fn simulate_cascade<R: Rng + ?Sized>(
    graph: &SocialGraph,
    probs: &EdgeProbabilities,
    seeds: &[NodeId],
    rng: &mut R,
) -> Result<CascadeOutcome> {
    graph.check_nodes(seeds)?;
    let mut active = vec![false; graph.node_count()];
    let mut activated = Vec::new();
    for &s in seeds {
        if !active[s] {
            active[s] = true;
            activated.push(s);
        }
    }
    let mut edge_trials = Vec::new();
    let mut head = 0;
    while head < activated.len() {
        let u = activated[head];
        head += 1;
        for &e in graph.out_edges(u) {
            let fired = rng.random::<f64>() < probs.get(e);
            edge_trials.push((e, fired));
            let v = graph.edge(e).1;
            if fired && !active[v] {
                active[v] = true;
                activated.push(v);
            }
        }
    }
    Ok(CascadeOutcome { activated, edge_trials })
}

/// Reusable scratch space for counting cascade sizes without allocation.
pub(crate) struct CascadeCounter {
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<NodeId>,
}

impl CascadeCounter {
    pub(crate) fn new(node_count: usize) -> Self {
        Self { stamp: vec![0; node_count], epoch: 0, queue: Vec::with_capacity(node_count) }
    }

    /// Size of one cascade. Coins are drawn in the same order as
    /// [`simulate_cascade`], so both see identical realizations for a stream.
    pub(crate) fn run<R: Rng + ?Sized>(
        &mut self,
        graph: &SocialGraph,
        probs: &EdgeProbabilities,
        seeds: &[NodeId],
        rng: &mut R,
    ) -> usize {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.queue.clear();
        for &s in seeds {
            if self.stamp[s] != epoch {
                self.stamp[s] = epoch;
                self.queue.push(s);
            }
        }
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            for &e in graph.out_edges(u) {
                let fired = rng.random::<f64>() < probs.get(e);
                let v = graph.edge(e).1;
                if fired && self.stamp[v] != epoch {
                    self.stamp[v] = epoch;
                    self.queue.push(v);
                }
            }
        }
        self.queue.len()
    }
}

/// Monte-Carlo estimate of the expected spread.
///
/// Simulation `i` draws from stream `i` of `root_seed`, so the estimate is a
/// pure function of its inputs.
pub fn mc_spread(
    graph: &SocialGraph,
    probs: &EdgeProbabilities,
    seeds: &[NodeId],
    n_sims: usize,
    root_seed: u64,
) -> Result<SpreadEstimate> {
    graph.check_nodes(seeds)?;
    if n_sims == 0 {
        return Err(Error::Contract("n_sims must be at least 1".into()));
    }
    let mut counter = CascadeCounter::new(graph.node_count());
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..n_sims {
        let mut stream = rng::stream(root_seed, i as u64);
        let size = counter.run(graph, probs, seeds, &mut stream) as f64;
        sum += size;
        sum_sq += size * size;
    }
    let n = n_sims as f64;
    let mean = sum / n;
    let stderr = if n_sims > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(SpreadEstimate { mean, stderr })
}

fn check_enumerable(graph: &SocialGraph) -> Result<()> {
    if graph.edge_count() > MAX_ENUMERABLE_EDGES {
        return Err(Error::Guard(format!(
            "{} edges exceed the enumeration limit of {MAX_ENUMERABLE_EDGES}",
            graph.edge_count()
        )));
    }
    Ok(())
}

/// Exact expected spread by summing over all `2^|E|` live-edge realizations.
pub fn exact_spread(graph: &SocialGraph, probs: &EdgeProbabilities, seeds: &[NodeId]) -> Result<f64> {
    check_enumerable(graph)?;
    graph.check_nodes(seeds)?;
    let m = graph.edge_count();
    let mut reached = vec![false; graph.node_count()];
    let mut stack = Vec::with_capacity(graph.node_count());
    let mut total = 0.0;
    for world in 0u32..(1u32 << m) {
        let weight: f64 = (0..m)
            .map(|e| if world >> e & 1 == 1 { probs.get(e) } else { 1.0 - probs.get(e) })
            .product();
        if weight == 0.0 {
            continue;
        }
        reached.fill(false);
        stack.clear();
        for &s in seeds {
            if !reached[s] {
                reached[s] = true;
                stack.push(s);
            }
        }
        let mut count = stack.len();
        while let Some(u) = stack.pop() {
            for &e in graph.out_edges(u) {
                let v = graph.edge(e).1;
                if world >> e & 1 == 1 && !reached[v] {
                    reached[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        total += weight * count as f64;
    }
    Ok(total)
}

/// Precomputed live-edge worlds for repeated exact spread queries on one
/// small graph: per world, its probability and every node's reachable set.
#[derive(Debug, Clone)]
pub struct ExactSpreadTable {
    node_count: usize,
    weights: Vec<f64>,
    /// `reach[w * n + v]` is the bitset of nodes reachable from `v` in world `w`.
    reach: Vec<u128>,
}

impl ExactSpreadTable {
    pub fn new(graph: &SocialGraph, probs: &EdgeProbabilities) -> Result<Self> {
        check_enumerable(graph)?;
        let n = graph.node_count();
        if n > 128 {
            return Err(Error::Guard(format!("{n} nodes exceed the 128-node table limit")));
        }
        let m = graph.edge_count();
        let mut weights = Vec::new();
        let mut reach = Vec::new();
        let mut adj = vec![0u128; n];
        for world in 0u32..(1u32 << m) {
            let weight: f64 = (0..m)
                .map(|e| if world >> e & 1 == 1 { probs.get(e) } else { 1.0 - probs.get(e) })
                .product();
            if weight == 0.0 {
                continue;
            }
            adj.fill(0);
            for (e, &(src, dst)) in graph.edges().iter().enumerate() {
                if world >> e & 1 == 1 {
                    adj[src] |= 1 << dst;
                }
            }
            weights.push(weight);
            for v in 0..n {
                let mut seen: u128 = 1 << v;
                let mut frontier = seen;
                while frontier != 0 {
                    let mut next = 0;
                    let mut bits = frontier;
                    while bits != 0 {
                        let u = bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        next |= adj[u];
                    }
                    frontier = next & !seen;
                    seen |= next;
                }
                reach.push(seen);
            }
        }
        Ok(Self { node_count: n, weights, reach })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn spread(&self, seeds: &[NodeId]) -> f64 {
        let n = self.node_count;
        self.weights
            .iter()
            .enumerate()
            .map(|(w, &weight)| {
                let covered = seeds.iter().fold(0u128, |acc, &s| acc | self.reach[w * n + s]);
                weight * covered.count_ones() as f64
            })
            .sum()
    }
}
