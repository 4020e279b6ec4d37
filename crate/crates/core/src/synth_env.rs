//! Synthetic ground truth: hidden CP factors, user/product features and
//! Bernoulli edge feedback.
//!
//! User and product feature spaces are split into one block per latent
//! pattern. A user leans towards one block; the hidden factors of pattern
//! `r` live on block `r`, so edges whose endpoints share a pattern are
//! "hot" for products carrying that pattern and "cold" for products
//! carrying another one. Heterogeneity interpolates every product between
//! a common mixture (0) and its own signed pattern (1).

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::im_graph::{EdgeId, EdgeProbabilities, NodeId, SocialGraph};
use crate::policy::edge_context;
use crate::rng::{self, StreamRng};
use crate::tensor_model::{clamp_norm, ContextTensor};

/// Range of ground-truth activation probabilities.
pub const P_MIN: f64 = 0.0;
pub const P_MAX: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvironmentConfig {
    pub user_dim: usize,
    pub product_dim: usize,
    pub true_rank: usize,
    pub n_products: usize,
    pub heterogeneity: f64,
    /// Affine map `p = clamp(scale · (W*, X) + offset, P_MIN, P_MAX)`.
    pub scale: f64,
    pub offset: f64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self { user_dim: 10, product_dim: 10, true_rank: 2, n_products: 4, heterogeneity: 1.0, scale: 0.7, offset: 0.0 }
    }
}

impl EnvironmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.true_rank == 0 {
            return Err(Error::Config("true rank must be at least 1".into()));
        }
        if self.user_dim < self.true_rank || self.product_dim < self.true_rank {
            return Err(Error::Config(format!(
                "feature dimensions ({}, {}) must be at least the true rank {}",
                self.user_dim, self.product_dim, self.true_rank
            )));
        }
        if self.n_products == 0 {
            return Err(Error::Config("need at least one product".into()));
        }
        if !(0.0..=1.0).contains(&self.heterogeneity) {
            return Err(Error::Config(format!("heterogeneity {} outside [0, 1]", self.heterogeneity)));
        }
        if !self.scale.is_finite() || !self.offset.is_finite() {
            return Err(Error::Config("affine map must be finite".into()));
        }
        Ok(())
    }
}

/// Hidden activation model `p*_{i,j}^z` plus the observable features.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthModel {
    /// `factors[r][l]` for modes (source, target, product).
    factors: Vec<[DVector<f64>; 3]>,
    user_features: FeatureTable,
    products: Vec<DVector<f64>>,
    scale: f64,
    offset: f64,
    cap: f64,
}

/// One edge-level observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub edge: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub context: ContextTensor,
    pub response: f64,
}

/// Index ranges of the `parts` blocks of `0..dim`.
fn blocks(dim: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    (0..parts).map(|r| (r * dim / parts)..((r + 1) * dim / parts)).collect()
}

fn block_vector(dim: usize, block: &std::ops::Range<usize>, rng: &mut StreamRng) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    for i in block.clone() {
        v[i] = rng.random_range(0.5..1.0);
    }
    v.normalize()
}

impl GroundTruthModel {
    /// Draws features, products and hidden factors for `graph.node_count()` users.
    pub fn generate(graph: &SocialGraph, cfg: &EnvironmentConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let r_star = cfg.true_rank;
        let user_blocks = blocks(cfg.user_dim, r_star);
        let product_blocks = blocks(cfg.product_dim, r_star);

        let mut factor_rng = rng::stream(seed, 0);
        let factors: Vec<[DVector<f64>; 3]> = (0..r_star)
            .map(|r| {
                [
                    block_vector(cfg.user_dim, &user_blocks[r], &mut factor_rng),
                    block_vector(cfg.user_dim, &user_blocks[r], &mut factor_rng),
                    block_vector(cfg.product_dim, &product_blocks[r], &mut factor_rng),
                ]
            })
            .collect();

        let mut user_rng = rng::stream(seed, 1);
        let users = (0..graph.node_count())
            .map(|_| {
                let group = user_rng.random_range(0..r_star);
                let v = DVector::from_fn(cfg.user_dim, |i, _| {
                    if user_blocks[group].contains(&i) {
                        user_rng.random_range(0.5..1.0)
                    } else {
                        user_rng.random_range(0.0..0.2)
                    }
                });
                v.normalize()
            })
            .collect();

        let common: DVector<f64> = factors.iter().map(|f| &f[2]).sum::<DVector<f64>>().normalize();
        // Pattern r favours its own block and penalises the others.
        let patterns: Vec<DVector<f64>> = (0..r_star)
            .map(|r| {
                let mut p = factors[r][2].clone();
                if r_star > 1 {
                    let w = 1.0 / (r_star - 1) as f64;
                    factors.iter().enumerate().filter(|&(q, _)| q != r).for_each(|(_, f)| p.axpy(-w, &f[2], 1.0));
                }
                p
            })
            .collect();
        let h = cfg.heterogeneity;
        let mut product_rng = rng::stream(seed, 2);
        let products = (0..cfg.n_products)
            .map(|k| {
                let pattern = &patterns[k % r_star];
                let wobble = DVector::from_fn(cfg.product_dim, |_, _| product_rng.random_range(0.0..0.1));
                let v = common.scale(1.0 - h) + (pattern + wobble).scale(h);
                v.normalize()
            })
            .collect();

        Ok(Self {
            factors,
            user_features: FeatureTable::from_rows(users)?,
            products,
            scale: cfg.scale,
            offset: cfg.offset,
            cap: P_MAX,
        })
    }

    /// Ground truth over externally supplied features with random
    /// non-negative hidden factors of rank `true_rank`.
    pub fn from_features(
        user_features: FeatureTable,
        products: FeatureTable,
        true_rank: usize,
        scale: f64,
        offset: f64,
        seed: u64,
    ) -> Result<Self> {
        if true_rank == 0 {
            return Err(Error::Config("true rank must be at least 1".into()));
        }
        let products: Vec<DVector<f64>> = products.ids().map(|id| products.get(id).cloned()).collect::<Option<_>>().unwrap_or_default();
        if products.is_empty() {
            return Err(Error::Config("product pool is empty".into()));
        }
        let mut rng = rng::stream(seed, 0);
        let (du, dp) = (user_features.dim(), products[0].len());
        let mut draw = |d: usize| DVector::from_fn(d, |_, _| rng.random_range(0.0..1.0)).normalize();
        let factors = (0..true_rank).map(|_| [draw(du), draw(du), draw(dp)]).collect();
        Ok(Self { factors, user_features, products: products.into_iter().map(clamp_norm).collect(), scale, offset, cap: P_MAX })
    }

    /// Replaces the upper probability bound (default [`P_MAX`]).
    pub fn with_probability_cap(mut self, cap: f64) -> Self {
        self.cap = cap.clamp(P_MIN, 1.0);
        self
    }

    pub fn user_features(&self) -> &FeatureTable {
        &self.user_features
    }

    pub fn products(&self) -> &[DVector<f64>] {
        &self.products
    }

    pub fn product(&self, id: usize) -> Result<&DVector<f64>> {
        self.products.get(id).ok_or_else(|| Error::Contract(format!("unknown product {id}")))
    }

    pub fn true_rank(&self) -> usize {
        self.factors.len()
    }

    /// Mode dimensions `(d_user, d_user, d_product)`.
    pub fn dims(&self) -> Vec<usize> {
        vec![self.user_features.dim(), self.user_features.dim(), self.products.first().map_or(0, |p| p.len())]
    }

    /// Hidden factor `w*^{l,r}`.
    pub fn hidden_factor(&self, l: usize, r: usize) -> &DVector<f64> {
        &self.factors[r][l]
    }

    /// Clipped affine score of a context, ignoring the graph.
    pub fn score(&self, x: &ContextTensor) -> f64 {
        let inner: f64 = self
            .factors
            .iter()
            .map(|f| (0..3).map(|l| x.mode(l).dot(&f[l])).product::<f64>())
            .sum();
        (self.scale * inner + self.offset).clamp(P_MIN, self.cap)
    }

    /// `p*_{i,j}^z`, zero when `i → j` is not an edge.
    pub fn pair_probability(&self, graph: &SocialGraph, src: NodeId, dst: NodeId, product: usize) -> Result<f64> {
        if graph.find_edge(src, dst).is_none() {
            return Ok(0.0);
        }
        let z = self.product(product)?;
        Ok(self.score(&edge_context(&self.user_features, src, dst, std::slice::from_ref(z))?))
    }

    /// `p*` for every edge under product `product`.
    pub fn edge_probabilities(&self, graph: &SocialGraph, product: usize) -> Result<EdgeProbabilities> {
        let z = self.product(product)?;
        let values = graph
            .edges()
            .iter()
            .map(|&(i, j)| Ok(self.score(&edge_context(&self.user_features, i, j, std::slice::from_ref(z))?)))
            .collect::<Result<Vec<f64>>>()?;
        EdgeProbabilities::new(graph, values)
    }

    /// Uniform draw from the product pool.
    pub fn sample_product<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.products.is_empty() {
            return Err(Error::Config("product pool is empty".into()));
        }
        Ok(rng.random_range(0..self.products.len()))
    }

    /// One Bernoulli response per out-edge of every seed, in seed order
    /// then out-edge order.
    pub fn sample_feedback<R: Rng + ?Sized>(
        &self,
        graph: &SocialGraph,
        seeds: &[NodeId],
        product: usize,
        rng: &mut R,
    ) -> Result<Vec<Feedback>> {
        graph.check_nodes(seeds)?;
        let z = self.product(product)?;
        let mut out = Vec::with_capacity(seeds.iter().map(|&s| graph.out_degree(s)).sum());
        for &src in seeds {
            for &edge in graph.out_edges(src) {
                let dst = graph.edge(edge).1;
                let context = edge_context(&self.user_features, src, dst, std::slice::from_ref(z))?;
                let p = self.score(&context);
                let response = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                out.push(Feedback { edge, src, dst, context, response });
            }
        }
        Ok(out)
    }
}

/// Directed Erdős–Rényi graph: every ordered pair is an edge independently
/// with probability `mean_out_degree / (n − 1)`.
pub fn random_graph(node_count: usize, mean_out_degree: f64, seed: u64) -> Result<SocialGraph> {
    if node_count < 2 {
        return Err(Error::Config("random graph needs at least two nodes".into()));
    }
    let p = mean_out_degree / (node_count - 1) as f64;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("mean out-degree {mean_out_degree} infeasible for {node_count} nodes")));
    }
    let mut rng = rng::stream(seed, 0);
    let mut edges = Vec::new();
    for i in 0..node_count {
        for j in 0..node_count {
            if i != j && rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    SocialGraph::new(node_count, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(h: f64, n_products: usize, seed: u64) -> (SocialGraph, GroundTruthModel) {
        let g = random_graph(60, 4.0, seed).unwrap();
        let cfg = EnvironmentConfig { heterogeneity: h, n_products, ..Default::default() };
        let m = GroundTruthModel::generate(&g, &cfg, seed).unwrap();
        (g, m)
    }

    fn mean_abs_gap(g: &SocialGraph, m: &GroundTruthModel) -> f64 {
        let a = m.edge_probabilities(g, 0).unwrap();
        let b = m.edge_probabilities(g, 1).unwrap();
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).sum::<f64>() / g.edge_count() as f64
    }

    #[test]
    fn config_validation() {
        let g = random_graph(10, 2.0, 0).unwrap();
        for cfg in [
            EnvironmentConfig { user_dim: 1, ..Default::default() },
            EnvironmentConfig { n_products: 0, ..Default::default() },
            EnvironmentConfig { heterogeneity: 1.5, ..Default::default() },
            EnvironmentConfig { true_rank: 0, ..Default::default() },
        ] {
            assert!(matches!(GroundTruthModel::generate(&g, &cfg, 0), Err(Error::Config(_))));
        }
        assert!(random_graph(1, 1.0, 0).is_err());
        assert!(random_graph(3, 5.0, 0).is_err());
    }

    #[test]
    fn zero_heterogeneity_collapses_products() {
        let (g, m) = env(0.0, 2, 3);
        assert_eq!(m.edge_probabilities(&g, 0).unwrap(), m.edge_probabilities(&g, 1).unwrap());
    }

    #[test]
    fn heterogeneity_separates_products() {
        let (g0, m0) = env(0.0, 2, 3);
        let (g1, m1) = env(1.0, 2, 3);
        assert_eq!(g0, g1);
        let gap0 = mean_abs_gap(&g0, &m0);
        let gap1 = mean_abs_gap(&g1, &m1);
        assert_eq!(gap0, 0.0);
        assert!(gap1 > 0.05, "gap at h=1: {gap1}");
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(env(0.7, 4, 9).1, env(0.7, 4, 9).1);
        assert_ne!(env(0.7, 4, 9).1, env(0.7, 4, 10).1);
    }

    #[test]
    fn probabilities_in_range_and_zero_off_graph() {
        let (g, m) = env(1.0, 4, 5);
        for k in 0..4 {
            let p = m.edge_probabilities(&g, k).unwrap();
            assert!(p.as_slice().iter().all(|&v| (P_MIN..=P_MAX).contains(&v)));
        }
        let (i, j) = (0..60)
            .flat_map(|i| (0..60).map(move |j| (i, j)))
            .find(|&(i, j)| i != j && g.find_edge(i, j).is_none())
            .unwrap();
        assert_eq!(m.pair_probability(&g, i, j, 0).unwrap(), 0.0);
        let (a, b) = g.edge(0);
        assert_eq!(m.pair_probability(&g, a, b, 2).unwrap(), m.edge_probabilities(&g, 2).unwrap().get(0));
    }

    #[test]
    fn features_are_normalized() {
        let (_, m) = env(0.5, 3, 1);
        for id in m.user_features().ids() {
            assert!(m.user_features().get(id).unwrap().norm() <= 1.0 + 1e-12);
        }
        assert!(m.products().iter().all(|z| z.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn feedback_count_matches_out_degrees() {
        let (g, m) = env(1.0, 4, 2);
        let seeds: Vec<NodeId> = vec![0, 5, 17, 33];
        let fb = m.sample_feedback(&g, &seeds, 1, &mut rng::stream(4, 0)).unwrap();
        assert_eq!(fb.len(), seeds.iter().map(|&s| g.out_degree(s)).sum::<usize>());
        for f in &fb {
            assert!(seeds.contains(&f.src));
            assert_eq!(g.edge(f.edge), (f.src, f.dst));
            assert_eq!(f.context.mode(2), m.product(1).unwrap());
        }
    }

    #[test]
    fn isolated_seed_yields_no_feedback() {
        let g = SocialGraph::new(3, vec![(0, 1)]).unwrap();
        let cfg = EnvironmentConfig { user_dim: 2, product_dim: 2, ..Default::default() };
        let m = GroundTruthModel::generate(&g, &cfg, 0).unwrap();
        assert!(m.sample_feedback(&g, &[2], 0, &mut rng::stream(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn certain_edges_always_respond() {
        let g = SocialGraph::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let users = FeatureTable::from_rows(vec![DVector::from_element(1, 1.0); 3]).unwrap();
        let products = FeatureTable::from_rows(vec![DVector::from_element(1, 1.0)]).unwrap();
        let m = GroundTruthModel::from_features(users, products, 1, 0.0, 1.0, 0).unwrap();
        assert_eq!(m.edge_probabilities(&g, 0).unwrap().as_slice(), &[P_MAX, P_MAX]);
        let m = m.with_probability_cap(1.0);
        let fb = m.sample_feedback(&g, &[0], 0, &mut rng::stream(3, 0)).unwrap();
        assert_eq!(fb.len(), 2);
        assert!(fb.iter().all(|f| f.response == 1.0));
    }

    #[test]
    fn single_product_pool() {
        let (_, m) = env(1.0, 1, 0);
        let mut r = rng::stream(1, 1);
        assert!((0..20).all(|_| m.sample_product(&mut r).unwrap() == 0));
    }
}
