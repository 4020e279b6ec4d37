use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use tensorucb::harness::experiment::{oracle_check, random_enumerable_instance};
use tensorucb::harness::{bound_report, default_eta, AgentKind, BoundParams, Campaign, CampaignConfig, RoundWriter, RunSummary};
use tensorucb::policy::Projection;
use tensorucb::rng;

#[derive(Parser)]
#[command(name = "tensorucb", version, about = "Contextual tensor bandits for influence maximization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign and write per-round regret as CSV.
    Run(RunArgs),
    /// Evaluate the regret bound and the minimal UCB multiplier.
    Bound(BoundArgs),
    /// Compare greedy against exhaustive seed selection on small instances.
    OracleCheck(OracleCheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "synthetic")]
    graph: Option<PathBuf>,
    /// Draw a synthetic graph (the default when no graph file is set).
    #[arg(long)]
    synthetic: bool,
    #[arg(long)]
    user_features: Option<PathBuf>,
    #[arg(long)]
    product_features: Option<PathBuf>,
    #[arg(long)]
    agent: Option<AgentKind>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    ucb_c: Option<f64>,
    #[arg(long)]
    proj: Option<Projection>,
    #[arg(long)]
    heterogeneity: Option<f64>,
    #[arg(long)]
    products: Option<usize>,
    #[arg(long)]
    true_rank: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    mean_out_degree: Option<f64>,
    /// Feature dimension for both users and products.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    fixed_product: Option<usize>,
    #[arg(long)]
    oracle_sims: Option<usize>,
    #[arg(long)]
    regret_sims: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    env_seed: Option<u64>,
    /// CSV output path (stdout when absent); a `.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record measured wall-clock per round instead of zero.
    #[arg(long)]
    record_timing: bool,
    /// Write the final posterior snapshot (JSON) here.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<CampaignConfig> {
        let mut cfg: CampaignConfig = match &self.config {
            Some(path) => serde_json::from_reader(BufReader::new(
                File::open(path).with_context(|| format!("opening {}", path.display()))?,
            ))
            .with_context(|| format!("parsing {}", path.display()))?,
            None => CampaignConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $flag:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(cfg.agent, self.agent);
        set!(cfg.rounds, self.rounds);
        set!(cfg.budget, self.budget);
        set!(cfg.rank, self.rank);
        set!(cfg.sigma2, self.sigma2);
        set!(cfg.ucb_c, self.ucb_c);
        set!(cfg.proj, self.proj);
        set!(cfg.oracle_sims, self.oracle_sims);
        set!(cfg.regret_sims, self.regret_sims);
        set!(cfg.eta, self.eta);
        set!(cfg.seed, self.seed);
        let env = &mut cfg.environment;
        set!(env.model.heterogeneity, self.heterogeneity);
        set!(env.model.n_products, self.products);
        set!(env.model.true_rank, self.true_rank);
        set!(env.nodes, self.nodes);
        set!(env.mean_out_degree, self.mean_out_degree);
        if let Some(d) = self.dim {
            env.model.user_dim = d;
            env.model.product_dim = d;
        }
        if self.synthetic {
            env.graph = None;
        }
        if self.graph.is_some() {
            env.graph = self.graph.clone();
        }
        if self.user_features.is_some() {
            env.user_features = self.user_features.clone();
        }
        if self.product_features.is_some() {
            env.product_features = self.product_features.clone();
        }
        if self.env_seed.is_some() {
            cfg.env_seed = self.env_seed;
        }
        if self.fixed_product.is_some() {
            cfg.fixed_product = self.fixed_product;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.record_timing |= self.record_timing;
        Ok(cfg)
    }
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value_t = 100)]
    nodes: usize,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 2)]
    rank: usize,
    #[arg(long, default_value_t = 0.1)]
    ucb_c: f64,
    /// Bounded-smoothness constant B.
    #[arg(long, default_value_t = 1.0)]
    smoothness: f64,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    #[arg(long, default_value_t = 10)]
    budget: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma2: f64,
    /// Largest factor-mean norm, e.g. from a posterior snapshot.
    #[arg(long, default_value_t = 0.0)]
    w_max: f64,
    /// Read `w_max` from a posterior snapshot instead.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct OracleCheckArgs {
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 12)]
    max_nodes: usize,
    #[arg(long, default_value_t = 16)]
    max_edges: usize,
    #[arg(long, default_value_t = 3)]
    max_budget: usize,
    #[arg(long, default_value_t = 500)]
    sims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let cfg = args.resolve()?;
    let campaign = Campaign::build(cfg.clone()).context("building campaign")?;
    let sink: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = RoundWriter::new(sink)?;
    let mut rows = Vec::new();
    let result = campaign.run_with(|log| {
        rows.push((log.cum_regret, log.avg_regret));
        writer.write(log)
    });
    let error = result.as_ref().err().map(|e| e.to_string());
    if let Some(path) = &cfg.out {
        let summary = RunSummary {
            config: &cfg,
            seed: cfg.seed,
            env_seed: cfg.env_seed(),
            nodes: campaign.graph.node_count(),
            edges: campaign.graph.edge_count(),
            rounds_completed: rows.len(),
            final_cum_regret: rows.last().map(|r| r.0),
            final_avg_regret: rows.last().map(|r| r.1),
            error: error.clone(),
        };
        let sidecar = path.with_extension("json");
        serde_json::to_writer_pretty(BufWriter::new(File::create(&sidecar)?), &summary)?;
    }
    let (_, agent) = result?;
    if let (Some(path), Some(posterior)) = (&args.snapshot, agent.posterior()) {
        posterior.write_json(BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn bound(args: BoundArgs) -> anyhow::Result<()> {
    let w_max = match &args.snapshot {
        Some(path) => tensorucb::tensor_model::SusceptibilityPosterior::read_json(BufReader::new(File::open(path)?))?.max_mean_norm(),
        None => args.w_max,
    };
    let params = BoundParams {
        nodes: args.nodes,
        order: args.order,
        rank: args.rank,
        c: args.ucb_c,
        smoothness: args.smoothness,
        eta: args.eta.unwrap_or_else(default_eta),
        rounds: args.rounds,
        budget: args.budget,
        max_dim: args.dim,
        sigma2: args.sigma2,
    };
    let report = bound_report(&params, w_max)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn oracle_check_cmd(args: OracleCheckArgs) -> anyhow::Result<()> {
    if args.max_edges > tensorucb::im_graph::MAX_ENUMERABLE_EDGES {
        bail!("--max-edges must be at most {}", tensorucb::im_graph::MAX_ENUMERABLE_EDGES);
    }
    let eta = default_eta();
    let bound = 1.0 - (-1.0f64).exp();
    let (mut exact_ok, mut mc_ok) = (0, 0);
    println!("instance,nodes,edges,budget,optimum,greedy_exact,greedy_mc,exact_ratio,mc_ratio");
    for i in 0..args.instances {
        let seed = rng::derive_seed(args.seed, &[i as u64]);
        let (graph, probs) = random_enumerable_instance(seed, args.max_nodes, args.max_edges)?;
        let budget = 1 + (seed % args.max_budget.max(1) as u64) as usize;
        let check = oracle_check(&graph, &probs, budget.min(graph.node_count()), args.sims, seed)?;
        exact_ok += usize::from(check.exact_ratio() >= bound);
        mc_ok += usize::from(check.mc_ratio() >= eta);
        println!(
            "{i},{},{},{},{},{},{},{},{}",
            check.nodes, check.edges, check.budget, check.optimum, check.greedy_exact, check.greedy_mc,
            check.exact_ratio(), check.mc_ratio()
        );
    }
    eprintln!("greedy (exact) >= (1-1/e)·OPT: {exact_ok}/{}", args.instances);
    eprintln!("greedy (MC, {} sims) >= η·OPT: {mc_ok}/{}", args.sims, args.instances);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Bound(args) => bound(args),
        Command::OracleCheck(args) => oracle_check_cmd(args),
    }
}
