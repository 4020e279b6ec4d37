use std::fs::File;
use std::io::BufReader;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::agent::Agent;
use super::config::CampaignConfig;
use super::regret::{regret_series, RegretEvaluator, RegretPoint};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::im_graph::{load_graph, EdgeId, NodeId, SocialGraph};
use crate::rng;
use crate::synth_env::{random_graph, GroundTruthModel};

// Stream tags for per-round randomness.
const TAG_PRODUCT: u64 = 1;
const TAG_ORACLE: u64 = 2;
const TAG_FEEDBACK: u64 = 3;
const TAG_EVAL: u64 = 4;
const TAG_OPTIMUM: u64 = 5;
const TAG_GRAPH: u64 = 6;
const TAG_ENV: u64 = 7;

/// One campaign round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub product_id: usize,
    pub seeds: Vec<NodeId>,
    /// `(edge, responded)` for every seed out-edge.
    pub feedback: Vec<(EdgeId, bool)>,
    pub spread: f64,
    pub opt_spread: f64,
    pub regret: f64,
    pub cum_regret: f64,
    pub avg_regret: f64,
    pub elapsed_ms: f64,
}

/// A resolved campaign: configuration, graph and ground truth.
pub struct Campaign {
    pub config: CampaignConfig,
    pub graph: SocialGraph,
    pub env: GroundTruthModel,
}

impl Campaign {
    /// Validates the configuration and builds (or loads) graph and environment.
    pub fn build(config: CampaignConfig) -> Result<Self> {
        config.validate()?;
        let spec = &config.environment;
        let env_seed = config.env_seed();
        let graph = match &spec.graph {
            Some(path) => load_graph(BufReader::new(File::open(path)?))?.0,
            None => random_graph(spec.nodes, spec.mean_out_degree, rng::derive_seed(env_seed, &[TAG_GRAPH]))?,
        };
        let env = match (&spec.user_features, &spec.product_features) {
            (Some(users), Some(products)) => {
                let users = FeatureTable::load(BufReader::new(File::open(users)?))?;
                let products = FeatureTable::load(BufReader::new(File::open(products)?))?;
                GroundTruthModel::from_features(
                    users,
                    products,
                    spec.model.true_rank,
                    spec.model.scale,
                    spec.model.offset,
                    rng::derive_seed(env_seed, &[TAG_ENV]),
                )?
            }
            (None, None) => GroundTruthModel::generate(&graph, &spec.model, rng::derive_seed(env_seed, &[TAG_ENV]))?,
            _ => return Err(Error::Config("user and product feature files must be given together".into())),
        };
        Self::from_parts(config, graph, env)
    }

    pub fn from_parts(config: CampaignConfig, graph: SocialGraph, env: GroundTruthModel) -> Result<Self> {
        config.validate()?;
        if config.budget > graph.node_count() {
            return Err(Error::Config(format!("budget {} exceeds {} nodes", config.budget, graph.node_count())));
        }
        for v in 0..graph.node_count() {
            env.user_features().require(v)?;
        }
        if let Some(p) = config.fixed_product {
            env.product(p)?;
        }
        Ok(Self { config, graph, env })
    }

    fn evaluator(&self) -> RegretEvaluator<'_> {
        let c = &self.config;
        RegretEvaluator::new(
            &self.graph,
            &self.env,
            c.budget,
            c.oracle_sims,
            c.regret_sims,
            rng::derive_seed(c.seed, &[TAG_OPTIMUM]),
        )
    }

    fn round_seed(&self, round: usize, tag: u64) -> u64 {
        rng::derive_seed(self.config.seed, &[round as u64, tag])
    }

    fn product_for(&self, round: usize) -> Result<usize> {
        match self.config.fixed_product {
            Some(p) => Ok(p),
            None => self.env.sample_product(&mut rng::stream(self.round_seed(round, TAG_PRODUCT), 0)),
        }
    }

    /// Runs all rounds, handing each finished round to `sink`.
    ///
    /// On a mid-run failure the rounds already handed out stay with the sink
    /// and the error is returned.
    pub fn run_with<F>(&self, mut sink: F) -> Result<(Vec<RoundLog>, Agent)>
    where
        F: FnMut(&RoundLog) -> Result<()>,
    {
        let cfg = &self.config;
        let mut agent = Agent::new(cfg, &self.env)?;
        let mut evaluator = self.evaluator();
        let mut logs: Vec<RoundLog> = Vec::with_capacity(cfg.rounds);
        let mut cumulative = 0.0;
        for t in 1..=cfg.rounds {
            let started = Instant::now();
            let product = self.product_for(t)?;
            let seeds = agent.select(&self.graph, &self.env, product, cfg.budget, cfg.oracle_sims, self.round_seed(t, TAG_ORACLE))?;
            let feedback = self.env.sample_feedback(
                &self.graph,
                &seeds,
                product,
                &mut rng::stream(self.round_seed(t, TAG_FEEDBACK), 0),
            )?;
            agent.observe(&feedback)?;
            let (opt_spread, spread) = evaluator.spreads(product, &seeds, self.round_seed(t, TAG_EVAL))?;
            let point = regret_series(&[(opt_spread, spread)], cfg.eta)[0];
            cumulative += point.instant;
            let elapsed_ms = if cfg.record_timing { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            let log = RoundLog {
                round: t,
                product_id: product,
                seeds,
                feedback: feedback.iter().map(|f| (f.edge, f.response > 0.5)).collect(),
                spread,
                opt_spread,
                regret: point.instant,
                cum_regret: cumulative,
                avg_regret: cumulative / t as f64,
                elapsed_ms,
            };
            sink(&log)?;
            logs.push(log);
        }
        Ok((logs, agent))
    }

    pub fn run(&self) -> Result<Vec<RoundLog>> {
        Ok(self.run_with(|_| Ok(()))?.0)
    }

    /// Recomputes the η-scaled regret series of a finished run.
    pub fn scaled_regret(&self, logs: &[RoundLog]) -> Result<Vec<RegretPoint>> {
        let mut evaluator = self.evaluator();
        let spreads = logs
            .iter()
            .map(|log| evaluator.spreads(log.product_id, &log.seeds, self.round_seed(log.round, TAG_EVAL)))
            .collect::<Result<Vec<_>>>()?;
        Ok(regret_series(&spreads, self.config.eta))
    }
}

/// Builds the campaign described by `cfg` and runs it.
pub fn run_campaign(cfg: CampaignConfig) -> Result<Vec<RoundLog>> {
    Campaign::build(cfg)?.run()
}
