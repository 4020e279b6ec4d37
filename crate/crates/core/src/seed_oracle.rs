//! Budgeted seed selection: lazy greedy (CELF) and an exhaustive reference.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::im_graph::{EdgeProbabilities, ExactSpreadTable, NodeId, SocialGraph};
use crate::rng;

/// Default number of live-edge worlds per greedy call.
pub const DEFAULT_ORACLE_SIMS: usize = 200;

/// Upper limit on the number of subsets [`exhaustive_seeds`] will score.
pub const MAX_EXHAUSTIVE_SUBSETS: u128 = 100_000;

/// A monotone submodular set function evaluated incrementally.
pub trait SpreadObjective {
    fn node_count(&self) -> usize;
    /// `f(S ∪ {v}) − f(S)` for the committed set `S`.
    fn marginal_gain(&mut self, v: NodeId) -> f64;
    fn commit(&mut self, v: NodeId);
}

/// Sample-average spread over a fixed batch of live-edge worlds.
///
/// Every candidate in every greedy step is scored on the same worlds, so the
/// comparison between candidates is free of sampling noise between them.
pub struct SampledWorlds<'g> {
    graph: &'g SocialGraph,
    n_worlds: usize,
    /// `live[w * |E| + e]`.
    live: Vec<bool>,
    /// `covered[w * |V| + v]`.
    covered: Vec<bool>,
    stack: Vec<NodeId>,
    visited: Vec<NodeId>,
}

impl<'g> SampledWorlds<'g> {
    /// World `i` flips its edge coins from stream `i` of `root_seed`.
    pub fn new(graph: &'g SocialGraph, probs: &EdgeProbabilities, n_worlds: usize, root_seed: u64) -> Result<Self> {
        if n_worlds == 0 {
            return Err(Error::Contract("n_sims must be at least 1".into()));
        }
        let m = graph.edge_count();
        let mut live = Vec::with_capacity(n_worlds * m);
        for w in 0..n_worlds {
            let mut stream = rng::stream(root_seed, w as u64);
            live.extend((0..m).map(|e| stream.random::<f64>() < probs.get(e)));
        }
        Ok(Self {
            graph,
            n_worlds,
            live,
            covered: vec![false; n_worlds * graph.node_count()],
            stack: Vec::new(),
            visited: Vec::new(),
        })
    }

    /// Nodes newly reached from `v` in world `w`; marks them when `mark` is set.
    fn expand(&mut self, w: usize, v: NodeId, mark: bool) -> usize {
        let n = self.graph.node_count();
        let m = self.graph.edge_count();
        let covered = &mut self.covered[w * n..(w + 1) * n];
        if covered[v] {
            return 0;
        }
        let live = &self.live[w * m..(w + 1) * m];
        self.stack.clear();
        self.visited.clear();
        covered[v] = true;
        self.stack.push(v);
        self.visited.push(v);
        while let Some(u) = self.stack.pop() {
            for &e in self.graph.out_edges(u) {
                let t = self.graph.edge(e).1;
                if live[e] && !covered[t] {
                    covered[t] = true;
                    self.stack.push(t);
                    self.visited.push(t);
                }
            }
        }
        if !mark {
            for &u in &self.visited {
                covered[u] = false;
            }
        }
        self.visited.len()
    }
}

impl SpreadObjective for SampledWorlds<'_> {
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    fn marginal_gain(&mut self, v: NodeId) -> f64 {
        let total: usize = (0..self.n_worlds).map(|w| self.expand(w, v, false)).sum();
        total as f64 / self.n_worlds as f64
    }

    fn commit(&mut self, v: NodeId) {
        for w in 0..self.n_worlds {
            self.expand(w, v, true);
        }
    }
}

/// Exact spread through full enumeration of live-edge worlds.
pub struct ExactObjective {
    table: ExactSpreadTable,
    seeds: Vec<NodeId>,
    value: f64,
}

impl ExactObjective {
    pub fn new(graph: &SocialGraph, probs: &EdgeProbabilities) -> Result<Self> {
        Ok(Self { table: ExactSpreadTable::new(graph, probs)?, seeds: Vec::new(), value: 0.0 })
    }
}

impl SpreadObjective for ExactObjective {
    fn node_count(&self) -> usize {
        self.table.node_count()
    }

    fn marginal_gain(&mut self, v: NodeId) -> f64 {
        self.seeds.push(v);
        let with_v = self.table.spread(&self.seeds);
        self.seeds.pop();
        with_v - self.value
    }

    fn commit(&mut self, v: NodeId) {
        self.seeds.push(v);
        self.value = self.table.spread(&self.seeds);
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    node: NodeId,
    /// Number of committed seeds when `gain` was computed.
    stamp: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Max-heap on gain; lower node id wins ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain.total_cmp(&other.gain).then_with(|| other.node.cmp(&self.node))
    }
}

/// Lazy greedy maximization of a submodular objective under a cardinality budget.
///
/// Returns exactly `k` distinct nodes in selection order.
pub fn lazy_greedy<O: SpreadObjective + ?Sized>(objective: &mut O, k: usize) -> Result<Vec<NodeId>> {
    let n = objective.node_count();
    if k == 0 || k > n {
        return Err(Error::Contract(format!("budget {k} outside 1..={n}")));
    }
    let mut heap: BinaryHeap<Candidate> = (0..n)
        .map(|node| Candidate { gain: objective.marginal_gain(node), node, stamp: 0 })
        .collect();
    let mut chosen = Vec::with_capacity(k);
    while chosen.len() < k {
        let Some(top) = heap.pop() else { break };
        if top.stamp == chosen.len() {
            objective.commit(top.node);
            chosen.push(top.node);
        } else {
            heap.push(Candidate { gain: objective.marginal_gain(top.node), node: top.node, stamp: chosen.len() });
        }
    }
    Ok(chosen)
}

/// CELF greedy on Monte-Carlo spread with `n_sims` shared live-edge worlds.
pub fn greedy_seeds(
    graph: &SocialGraph,
    probs: &EdgeProbabilities,
    k: usize,
    n_sims: usize,
    root_seed: u64,
) -> Result<Vec<NodeId>> {
    if k == 0 || k > graph.node_count() {
        return Err(Error::Contract(format!("budget {k} outside 1..={}", graph.node_count())));
    }
    let mut worlds = SampledWorlds::new(graph, probs, n_sims, root_seed)?;
    lazy_greedy(&mut worlds, k)
}

/// Greedy selection scored by exact enumeration (small graphs only).
pub fn greedy_seeds_exact(graph: &SocialGraph, probs: &EdgeProbabilities, k: usize) -> Result<Vec<NodeId>> {
    let mut objective = ExactObjective::new(graph, probs)?;
    lazy_greedy(&mut objective, k)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Optimal `k`-subset by exact spread, lexicographically smallest among ties.
pub fn exhaustive_seeds(graph: &SocialGraph, probs: &EdgeProbabilities, k: usize) -> Result<(Vec<NodeId>, f64)> {
    let n = graph.node_count();
    if k == 0 || k > n {
        return Err(Error::Contract(format!("budget {k} outside 1..={n}")));
    }
    let subsets = binomial(n, k);
    if subsets > MAX_EXHAUSTIVE_SUBSETS {
        return Err(Error::Guard(format!("C({n}, {k}) = {subsets} subsets exceed {MAX_EXHAUSTIVE_SUBSETS}")));
    }
    let table = ExactSpreadTable::new(graph, probs)?;
    let mut current: Vec<NodeId> = (0..k).collect();
    let mut best = (current.clone(), table.spread(&current));
    // Advance to the next combination in lexicographic order.
    while let Some(i) = (0..k).rev().find(|&i| current[i] < n - k + i) {
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
        let value = table.spread(&current);
        if value > best.1 + 1e-12 * best.1.abs().max(1.0) {
            best = (current.clone(), value);
        }
    }
    Ok(best)
}
