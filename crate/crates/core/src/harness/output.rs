use std::io::Write;

use serde::Serialize;

use super::campaign::RoundLog;
use super::config::CampaignConfig;
use crate::error::Result;

pub const CSV_HEADER: [&str; 8] =
    ["round", "product_id", "spread", "opt_spread", "regret", "cum_regret", "avg_regret", "elapsed_ms"];

/// Streaming CSV writer for round logs; every row is flushed immediately.
pub struct RoundWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RoundWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(CSV_HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, log: &RoundLog) -> Result<()> {
        self.inner.write_record([
            log.round.to_string(),
            log.product_id.to_string(),
            log.spread.to_string(),
            log.opt_spread.to_string(),
            log.regret.to_string(),
            log.cum_regret.to_string(),
            log.avg_regret.to_string(),
            log.elapsed_ms.to_string(),
        ])?;
        self.inner.flush()?;
        Ok(())
    }
}

/// Sidecar metadata written next to the CSV.
#[derive(Debug, Serialize)]
pub struct RunSummary<'a> {
    pub config: &'a CampaignConfig,
    pub seed: u64,
    pub env_seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub rounds_completed: usize,
    pub final_cum_regret: Option<f64>,
    pub final_avg_regret: Option<f64>,
    pub error: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows() {
        let mut buf = Vec::new();
        {
            let mut w = RoundWriter::new(&mut buf).unwrap();
            w.write(&RoundLog {
                round: 1,
                product_id: 2,
                seeds: vec![0],
                feedback: vec![],
                spread: 1.5,
                opt_spread: 2.0,
                regret: 0.25,
                cum_regret: 0.25,
                avg_regret: 0.25,
                elapsed_ms: 0.0,
            })
            .unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "round,product_id,spread,opt_spread,regret,cum_regret,avg_regret,elapsed_ms\n1,2,1.5,2,0.25,0.25,0.25,0\n"
        );
    }
}
