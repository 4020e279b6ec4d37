use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Projection;
use crate::seed_oracle::DEFAULT_ORACLE_SIMS;
use crate::synth_env::EnvironmentConfig;

/// Approximation ratio used to scale regret: `1 − 1/e − 0.1`.
pub fn default_eta() -> f64 {
    1.0 - (-1.0f64).exp() - 0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// CP-tensor posterior with UCB scoring.
    TensorUcb,
    /// Uniformly random seeds, no learning.
    Random,
    /// Vector LinUCB on the unit-normalized concatenation of all modes.
    ConcatLinucb,
    /// `TensorUcb` with the rank forced to one.
    Rank1,
    /// Greedy on the true probabilities; a zero-regret reference.
    Oracle,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::TensorUcb => "tensor_ucb",
            AgentKind::Random => "random",
            AgentKind::ConcatLinucb => "concat_linucb",
            AgentKind::Rank1 => "rank1",
            AgentKind::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [AgentKind::TensorUcb, AgentKind::Random, AgentKind::ConcatLinucb, AgentKind::Rank1, AgentKind::Oracle]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown agent {s:?}")))
    }
}

/// Where the graph and features come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvironmentSpec {
    /// Edge list file; a synthetic Erdős–Rényi graph is drawn when absent.
    pub graph: Option<PathBuf>,
    pub user_features: Option<PathBuf>,
    pub product_features: Option<PathBuf>,
    pub nodes: usize,
    pub mean_out_degree: f64,
    #[serde(flatten)]
    pub model: EnvironmentConfig,
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        Self {
            graph: None,
            user_features: None,
            product_features: None,
            nodes: 200,
            mean_out_degree: 5.0,
            model: EnvironmentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub agent: AgentKind,
    pub rounds: usize,
    pub budget: usize,
    pub rank: usize,
    pub sigma2: f64,
    pub ucb_c: f64,
    pub proj: Projection,
    pub oracle_sims: usize,
    pub regret_sims: usize,
    pub eta: f64,
    pub seed: u64,
    /// Seed for the synthetic graph and ground truth; defaults to `seed`.
    pub env_seed: Option<u64>,
    /// Always show this product instead of sampling one per round.
    pub fixed_product: Option<usize>,
    pub jitter_scale: f64,
    pub environment: EnvironmentSpec,
    pub out: Option<PathBuf>,
    /// Write measured per-round wall-clock time to the CSV; otherwise the
    /// column is zero so that outputs are byte-reproducible.
    pub record_timing: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            agent: AgentKind::TensorUcb,
            rounds: 100,
            budget: 10,
            rank: 2,
            sigma2: 0.1,
            ucb_c: 0.1,
            proj: Projection::Sigmoid,
            oracle_sims: DEFAULT_ORACLE_SIMS,
            regret_sims: 500,
            eta: default_eta(),
            seed: 0,
            env_seed: None,
            fixed_product: None,
            jitter_scale: 0.01,
            environment: EnvironmentSpec::default(),
            out: None,
            record_timing: false,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Config(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if !(self.ucb_c >= 0.0 && self.ucb_c.is_finite()) {
            return Err(Error::Config(format!("UCB multiplier must be non-negative, got {}", self.ucb_c)));
        }
        if self.oracle_sims == 0 || self.regret_sims == 0 {
            return Err(Error::Config("simulation counts must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        Ok(())
    }

    pub fn effective_rank(&self) -> usize {
        match self.agent {
            AgentKind::Rank1 => 1,
            _ => self.rank,
        }
    }

    pub fn env_seed(&self) -> u64 {
        self.env_seed.unwrap_or(self.seed)
    }
}
