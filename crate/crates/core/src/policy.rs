//! UCB scoring: predictive distribution → optimistic activation probability.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::im_graph::{EdgeProbabilities, SocialGraph};
use crate::tensor_model::{ContextTensor, SusceptibilityPosterior};

/// Monotone map from a real score onto `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    #[default]
    Sigmoid,
    /// Clamp to `[0, 1]`.
    Clip,
}

impl Projection {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Projection::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Projection::Clip => x.clamp(0.0, 1.0),
        }
    }
}

impl std::str::FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Projection::Sigmoid),
            "clip" => Ok(Projection::Clip),
            other => Err(Error::Config(format!("unknown projection {other:?} (sigmoid|clip)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub c: f64,
    pub proj: Projection,
}

impl PolicyConfig {
    pub fn new(c: f64, proj: Projection) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("UCB multiplier must be non-negative, got {c}")));
        }
        Ok(Self { c, proj })
    }
}

/// `c · Σ_{r,l} sqrt((β^{l,r}φ_l)ᵀ Σ^{l,r} (β^{l,r}φ_l))`.
pub fn ucb_width(posterior: &SusceptibilityPosterior, x: &ContextTensor, c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::Config(format!("UCB multiplier must be non-negative, got {c}")));
    }
    let terms = posterior.quadratic_forms(x)?;
    Ok(c * terms.iter().map(|q| q.max(0.0).sqrt()).sum::<f64>())
}

/// Multiplier giving a one-sided Gaussian tail of `delta`: `sqrt(−2 ln δ)`.
pub fn c_from_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((-2.0 * delta.ln()).sqrt())
}

/// `proj(ū + UCB)`.
pub fn activation_probability(posterior: &SusceptibilityPosterior, x: &ContextTensor, cfg: &PolicyConfig) -> Result<f64> {
    let mean = posterior.inner_product(x)?;
    let width = ucb_width(posterior, x, cfg.c)?;
    Ok(cfg.proj.apply(mean + width))
}

/// Scores every directed edge `(i, j)` with context `x_i ∘ x_j ∘ extra_modes…`.
pub fn edge_probability_map(
    posterior: &SusceptibilityPosterior,
    graph: &SocialGraph,
    user_features: &FeatureTable,
    extra_modes: &[DVector<f64>],
    cfg: &PolicyConfig,
) -> Result<EdgeProbabilities> {
    let values = graph
        .edges()
        .iter()
        .map(|&(src, dst)| {
            let x = edge_context(user_features, src, dst, extra_modes)?;
            activation_probability(posterior, &x, cfg)
        })
        .collect::<Result<Vec<f64>>>()?;
    EdgeProbabilities::new(graph, values)
}

/// Context for the event "source influences target" under the given extra modes.
pub fn edge_context(
    user_features: &FeatureTable,
    src: usize,
    dst: usize,
    extra_modes: &[DVector<f64>],
) -> Result<ContextTensor> {
    let mut modes = Vec::with_capacity(2 + extra_modes.len());
    modes.push(user_features.require(src)?.clone());
    modes.push(user_features.require(dst)?.clone());
    modes.extend(extra_modes.iter().cloned());
    ContextTensor::new(modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_model::PosteriorConfig;

    fn fresh(dims: Vec<usize>, rank: usize, sigma2: f64) -> SusceptibilityPosterior {
        SusceptibilityPosterior::new(&PosteriorConfig::new(dims, rank, sigma2).without_jitter()).unwrap()
    }

    #[test]
    fn width_vanishes_at_zero_multiplier() {
        let p = SusceptibilityPosterior::new(&PosteriorConfig::new(vec![3, 2], 2, 0.1)).unwrap();
        let x = ContextTensor::from_slices(&[&[0.2, 0.1, 0.4], &[0.5, 0.5]]).unwrap();
        assert_eq!(ucb_width(&p, &x, 0.0).unwrap(), 0.0);
        assert!(ucb_width(&p, &x, -1.0).is_err());
    }

    #[test]
    fn width_identity_covariance_case() {
        let p = fresh(vec![2, 2], 1, 0.1);
        let x = ContextTensor::from_slices(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!((ucb_width(&p, &x, 1.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn delta_to_multiplier() {
        assert!((c_from_delta((-2.0f64).exp()).unwrap() - 2.0).abs() < 1e-12);
        assert!(c_from_delta(1.0 - 1e-12).unwrap() < 1e-5);
        assert!((c_from_delta(0.05).unwrap() - 2.447_746_830_680_816).abs() < 1e-12);
        for bad in [0.0, 1.0, -0.1, 2.0, f64::NAN] {
            assert!(matches!(c_from_delta(bad), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn projections() {
        assert_eq!(Projection::Sigmoid.apply(0.0), 0.5);
        assert!((Projection::Sigmoid.apply(3.0) - 0.952_574_126_822_433_4).abs() < 1e-15);
        assert_eq!(Projection::Clip.apply(-0.3), 0.0);
        assert_eq!(Projection::Clip.apply(0.3), 0.3);
        assert_eq!(Projection::Clip.apply(7.0), 1.0);
        assert!(Projection::Sigmoid.apply(-800.0) >= 0.0 && Projection::Sigmoid.apply(800.0) <= 1.0);
        assert_eq!("clip".parse::<Projection>().unwrap(), Projection::Clip);
        assert!("tanh".parse::<Projection>().is_err());
    }

    #[test]
    fn activation_examples() {
        // ū = 1, width = 2 on the identity-covariance case.
        let p = fresh(vec![2, 2], 1, 0.1);
        let x = ContextTensor::from_slices(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let cfg = PolicyConfig::new(1.0, Projection::Sigmoid).unwrap();
        let prob = activation_probability(&p, &x, &cfg).unwrap();
        assert!((prob - 0.952_574_126_822_433_4).abs() < 1e-12);
        // Zero context: ū = 0 and width = 0.
        let z = ContextTensor::from_slices(&[&[0.0, 0.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(activation_probability(&p, &z, &cfg).unwrap(), 0.5);
        assert!(PolicyConfig::new(-0.1, Projection::Clip).is_err());
    }

    #[test]
    fn edge_map_on_small_graphs() {
        let p = SusceptibilityPosterior::new(&PosteriorConfig::new(vec![2, 2, 1], 2, 0.1)).unwrap();
        let users = FeatureTable::from_rows(vec![
            DVector::from_vec(vec![0.6, 0.1]),
            DVector::from_vec(vec![0.2, 0.3]),
            DVector::from_vec(vec![0.0, 0.9]),
        ])
        .unwrap();
        let extra = vec![DVector::from_vec(vec![0.4])];
        let cfg = PolicyConfig::new(0.5, Projection::Sigmoid).unwrap();

        let empty = SocialGraph::new(3, vec![]).unwrap();
        assert!(edge_probability_map(&p, &empty, &users, &extra, &cfg).unwrap().as_slice().is_empty());

        let tri = SocialGraph::new(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap();
        let map = edge_probability_map(&p, &tri, &users, &extra, &cfg).unwrap();
        for (e, &(i, j)) in tri.edges().iter().enumerate() {
            let x = ContextTensor::new(vec![users.get(i).unwrap().clone(), users.get(j).unwrap().clone(), extra[0].clone()]).unwrap();
            assert_eq!(map.get(e), activation_probability(&p, &x, &cfg).unwrap());
        }

        let partial = FeatureTable::from_rows(vec![DVector::from_vec(vec![0.1, 0.1])]).unwrap();
        assert!(matches!(edge_probability_map(&p, &tri, &partial, &extra, &cfg), Err(Error::Data(_))));
    }
}
