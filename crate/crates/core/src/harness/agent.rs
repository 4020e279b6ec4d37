use nalgebra::DVector;
use rand::seq::index;

use super::config::{AgentKind, CampaignConfig};
use crate::error::Result;
use crate::im_graph::{EdgeProbabilities, NodeId, SocialGraph};
use crate::policy::{activation_probability, edge_probability_map, PolicyConfig};
use crate::rng;
use crate::seed_oracle::greedy_seeds;
use crate::synth_env::{Feedback, GroundTruthModel};
use crate::tensor_model::{ContextTensor, PosteriorConfig, SusceptibilityPosterior};

/// A seed-selection strategy driven through the campaign loop.
#[derive(Debug, Clone)]
pub enum Agent {
    Tensor { posterior: SusceptibilityPosterior, policy: PolicyConfig },
    ConcatLinucb { posterior: SusceptibilityPosterior, policy: PolicyConfig },
    Random,
    Oracle,
}

impl Agent {
    pub fn new(cfg: &CampaignConfig, env: &GroundTruthModel) -> Result<Self> {
        let policy = PolicyConfig::new(cfg.ucb_c, cfg.proj)?;
        let posterior_cfg = |dims: Vec<usize>, rank: usize| PosteriorConfig {
            jitter_scale: cfg.jitter_scale,
            ..PosteriorConfig::new(dims, rank, cfg.sigma2).with_seed(rng::derive_seed(cfg.seed, &[0xA6E7]))
        };
        Ok(match cfg.agent {
            AgentKind::TensorUcb | AgentKind::Rank1 => Agent::Tensor {
                posterior: SusceptibilityPosterior::new(&posterior_cfg(env.dims(), cfg.effective_rank()))?,
                policy,
            },
            AgentKind::ConcatLinucb => Agent::ConcatLinucb {
                posterior: SusceptibilityPosterior::new(&posterior_cfg(vec![env.dims().iter().sum()], 1))?,
                policy,
            },
            AgentKind::Random => Agent::Random,
            AgentKind::Oracle => Agent::Oracle,
        })
    }

    pub fn posterior(&self) -> Option<&SusceptibilityPosterior> {
        match self {
            Agent::Tensor { posterior, .. } | Agent::ConcatLinucb { posterior, .. } => Some(posterior),
            _ => None,
        }
    }

    /// Estimated activation probabilities for this round's product, if the
    /// agent forms any.
    pub fn edge_map(&self, graph: &SocialGraph, env: &GroundTruthModel, product: usize) -> Result<Option<EdgeProbabilities>> {
        let z = env.product(product)?;
        match self {
            Agent::Tensor { posterior, policy } => Ok(Some(edge_probability_map(
                posterior,
                graph,
                env.user_features(),
                std::slice::from_ref(z),
                policy,
            )?)),
            Agent::ConcatLinucb { posterior, policy } => {
                let users = env.user_features();
                let values = graph
                    .edges()
                    .iter()
                    .map(|&(i, j)| {
                        let x = concat_context(users.require(i)?, users.require(j)?, z)?;
                        activation_probability(posterior, &x, policy)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(Some(EdgeProbabilities::new(graph, values)?))
            }
            Agent::Oracle => Ok(Some(env.edge_probabilities(graph, product)?)),
            Agent::Random => Ok(None),
        }
    }

    /// Picks `k` seeds for this round.
    pub fn select(
        &self,
        graph: &SocialGraph,
        env: &GroundTruthModel,
        product: usize,
        k: usize,
        oracle_sims: usize,
        round_seed: u64,
    ) -> Result<Vec<NodeId>> {
        match self.edge_map(graph, env, product)? {
            Some(map) => greedy_seeds(graph, &map, k, oracle_sims, round_seed),
            None => {
                if k > graph.node_count() {
                    return Err(crate::Error::Contract(format!("budget {k} exceeds {} nodes", graph.node_count())));
                }
                let mut r = rng::stream(round_seed, 1);
                Ok(index::sample(&mut r, graph.node_count(), k).into_vec())
            }
        }
    }

    pub fn observe(&mut self, feedback: &[Feedback]) -> Result<()> {
        match self {
            Agent::Tensor { posterior, .. } => {
                for f in feedback {
                    posterior.absorb(&f.context, f.response)?;
                }
            }
            Agent::ConcatLinucb { posterior, .. } => {
                for f in feedback {
                    let m = f.context.modes();
                    posterior.absorb(&concat_context(&m[0], &m[1], &m[2])?, f.response)?;
                }
            }
            Agent::Random | Agent::Oracle => {}
        }
        Ok(())
    }
}

/// Single-mode context `x_i ⊕ x_j ⊕ z`, unit-normalized.
pub fn concat_context(src: &DVector<f64>, dst: &DVector<f64>, z: &DVector<f64>) -> Result<ContextTensor> {
    let x = ContextTensor::new(vec![src.clone(), dst.clone(), z.clone()])?;
    ContextTensor::new(vec![x.concatenated()])
}
