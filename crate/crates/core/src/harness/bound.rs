use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs to the closed-form regret bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub nodes: usize,
    pub order: usize,
    pub rank: usize,
    pub c: f64,
    /// Bounded-smoothness constant.
    pub smoothness: f64,
    pub eta: f64,
    pub rounds: usize,
    pub budget: usize,
    /// `d = max_l d_l`.
    pub max_dim: usize,
    pub sigma2: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        let counts = [self.nodes, self.order, self.rank, self.rounds, self.budget, self.max_dim];
        if counts.contains(&0) {
            return Err(Error::Domain(format!("all counts must be positive: {self:?}")));
        }
        if !(self.c > 0.0 && self.smoothness > 0.0 && self.sigma2 > 0.0) {
            return Err(Error::Domain("c, B and σ² must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Domain(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        Ok(())
    }

    /// `sqrt(K d ln(1 + TK/(dσ²)) / ln(1 + 1/σ²))`.
    fn information_root(&self) -> f64 {
        let (t, k, d) = (self.rounds as f64, self.budget as f64, self.max_dim as f64);
        (k * d * (1.0 + t * k / (d * self.sigma2)).ln() / (1.0 + 1.0 / self.sigma2).ln()).sqrt()
    }
}

/// `(cB/η) |V| D R sqrt(T K d ln(1 + TK/(dσ²)) / ln(1 + 1/σ²))`.
pub fn theoretical_regret_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    let scale = p.c * p.smoothness / p.eta * (p.nodes * p.order * p.rank) as f64;
    Ok(scale * (p.rounds as f64).sqrt() * p.information_root())
}

/// Smallest UCB multiplier for which the bound is guaranteed:
/// `D R sqrt(K d ln(1 + TK/(dσ²)) / ln(1 + 1/σ²)) + max‖w^{l,r}‖₂`.
pub fn min_ucb_constant(p: &BoundParams, w_max: f64) -> Result<f64> {
    p.validate()?;
    if !(w_max >= 0.0 && w_max.is_finite()) {
        return Err(Error::Domain(format!("w_max must be a finite non-negative norm, got {w_max}")));
    }
    Ok((p.order * p.rank) as f64 * p.information_root() + w_max)
}

/// The bound, its UCB floor, and how far the configured `c` is from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub params: BoundParams,
    pub w_max: f64,
    pub regret_bound: f64,
    pub c_floor: f64,
    /// `c_floor − c`; positive when the configured `c` is below the floor.
    pub c_gap: f64,
    /// Regret bound re-evaluated at `c = c_floor`.
    pub bound_at_floor: f64,
}

pub fn bound_report(p: &BoundParams, w_max: f64) -> Result<BoundReport> {
    let regret_bound = theoretical_regret_bound(p)?;
    let c_floor = min_ucb_constant(p, w_max)?;
    let bound_at_floor = theoretical_regret_bound(&BoundParams { c: c_floor.max(f64::MIN_POSITIVE), ..*p })?;
    Ok(BoundReport { params: *p, w_max, regret_bound, c_floor, c_gap: c_floor - p.c, bound_at_floor })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn reference() -> BoundParams {
        BoundParams {
            nodes: 100,
            order: 3,
            rank: 2,
            c: 0.1,
            smoothness: 1.0,
            eta: 0.5321,
            rounds: 100,
            budget: 10,
            max_dim: 10,
            sigma2: 0.1,
        }
    }

    #[test]
    fn reference_value() {
        // ln(1 + 1000/1) = ln 1001, ln(1 + 10) = ln 11.
        let expected = 0.1 / 0.5321 * 600.0 * (100.0f64 * 10.0 * 10.0 * 1001f64.ln() / 11f64.ln()).sqrt();
        let got = theoretical_regret_bound(&reference()).unwrap();
        assert!((got - expected).abs() < 1e-9 * expected, "{got} vs {expected}");
    }

    #[test]
    fn linear_factors() {
        let base = theoretical_regret_bound(&reference()).unwrap();
        let r2 = theoretical_regret_bound(&BoundParams { rank: 4, ..reference() }).unwrap();
        let d2 = theoretical_regret_bound(&BoundParams { order: 6, ..reference() }).unwrap();
        assert!((r2 / base - 2.0).abs() < 1e-12);
        assert!((d2 / base - 2.0).abs() < 1e-12);
        let t4 = theoretical_regret_bound(&BoundParams { rounds: 400, ..reference() }).unwrap();
        assert!(t4 / base > 2.0 && t4 / base < 2.5);
    }

    #[test]
    fn floor_splits_additively() {
        let p = reference();
        let first = min_ucb_constant(&p, 0.0).unwrap();
        assert!((min_ucb_constant(&p, 1.5).unwrap() - first - 1.5).abs() < 1e-12);
        let doubled = min_ucb_constant(&BoundParams { rank: 4, ..p }, 0.0).unwrap();
        assert!((doubled / first - 2.0).abs() < 1e-12);
        // The empirical grid {1e-3, …, 1} sits far below the theoretical floor.
        assert!(first > 1.0);
        let report = bound_report(&p, 1.0).unwrap();
        assert!(report.c_gap > 0.0);
        assert!(report.bound_at_floor > report.regret_bound);
    }

    #[test]
    fn domain_errors() {
        assert!(theoretical_regret_bound(&BoundParams { eta: 0.0, ..reference() }).is_err());
        assert!(theoretical_regret_bound(&BoundParams { eta: 1.2, ..reference() }).is_err());
        assert!(theoretical_regret_bound(&BoundParams { rank: 0, ..reference() }).is_err());
        assert!(theoretical_regret_bound(&BoundParams { sigma2: 0.0, ..reference() }).is_err());
        assert!(min_ucb_constant(&reference(), -1.0).is_err());
    }
}
