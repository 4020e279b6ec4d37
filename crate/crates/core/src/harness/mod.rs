//! Campaign loop, baselines, regret accounting and the regret bound.

mod agent;
mod bound;
mod campaign;
mod config;
pub mod experiment;
mod output;
mod regret;

pub use agent::{concat_context, Agent};
pub use experiment::{final_average_regret, oracle_check, paired_difference, random_enumerable_instance, select_ucb_c, OracleCheck};
pub use bound::{bound_report, min_ucb_constant, theoretical_regret_bound, BoundParams, BoundReport};
pub use campaign::{run_campaign, Campaign, RoundLog};
pub use config::{default_eta, AgentKind, CampaignConfig, EnvironmentSpec};
pub use output::{RoundWriter, RunSummary, CSV_HEADER};
pub use regret::{regret_series, RegretEvaluator, RegretPoint};
