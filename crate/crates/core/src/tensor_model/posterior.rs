use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContextTensor, FactorState, FactorUpdate};
use crate::error::{Error, Result};
use crate::rng;

/// Settings for a fresh posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorConfig {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub noise_variance: f64,
    pub seed: u64,
    /// Half-width of the uniform jitter added to the all-ones initial means.
    /// Zero disables symmetry breaking.
    pub jitter_scale: f64,
    pub sweep_tolerance: f64,
    pub max_sweeps: usize,
    /// Re-evaluate all means after each absorbed sample until stable.
    pub refresh_means: bool,
}

impl PosteriorConfig {
    pub fn new(dims: Vec<usize>, rank: usize, noise_variance: f64) -> Self {
        Self {
            dims,
            rank,
            noise_variance,
            seed: 0,
            jitter_scale: 0.01,
            sweep_tolerance: 1e-6,
            max_sweeps: 50,
            refresh_means: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn without_jitter(mut self) -> Self {
        self.jitter_scale = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::Config("tensor order must be at least 1".into()));
        }
        if self.dims.contains(&0) {
            return Err(Error::Config(format!("all mode dimensions must be positive: {:?}", self.dims)));
        }
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::Config(format!("noise variance must be positive, got {}", self.noise_variance)));
        }
        if !(self.jitter_scale >= 0.0 && self.jitter_scale.is_finite()) {
            return Err(Error::Config("jitter scale must be non-negative".into()));
        }
        if !(self.sweep_tolerance > 0.0) || self.max_sweeps == 0 {
            return Err(Error::Config("sweep tolerance and max sweeps must be positive".into()));
        }
        Ok(())
    }
}

/// Mean-field posterior over the CP factors `{w^{l,r}}` of the susceptibility tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityPosterior {
    pub(crate) dims: Vec<usize>,
    pub(crate) rank: usize,
    pub(crate) noise_variance: f64,
    /// Row-major `D × R` grid: factor `(l, r)` lives at `l * R + r`.
    pub(crate) factors: Vec<FactorState>,
    pub(crate) jitter_scale: f64,
    pub(crate) sweep_tolerance: f64,
    pub(crate) max_sweeps: usize,
    pub(crate) refresh_means: bool,
}

/// Per-factor bookkeeping for one absorbed sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorStep {
    pub mode: usize,
    pub rank: usize,
    pub beta: f64,
    pub pseudo_response: f64,
    pub update: FactorUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl SusceptibilityPosterior {
    pub fn new(config: &PosteriorConfig) -> Result<Self> {
        config.validate()?;
        let mut jitter = rng::stream(config.seed, 0);
        let mut factors = Vec::with_capacity(config.dims.len() * config.rank);
        for &d in &config.dims {
            for _ in 0..config.rank {
                let mean = DVector::from_fn(d, |_, _| {
                    if config.jitter_scale > 0.0 {
                        1.0 + jitter.random_range(-config.jitter_scale..=config.jitter_scale)
                    } else {
                        1.0
                    }
                });
                factors.push(FactorState::with_mean(mean));
            }
        }
        Ok(Self {
            dims: config.dims.clone(),
            rank: config.rank,
            noise_variance: config.noise_variance,
            factors,
            jitter_scale: config.jitter_scale,
            sweep_tolerance: config.sweep_tolerance,
            max_sweeps: config.max_sweeps,
            refresh_means: config.refresh_means,
        })
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn max_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0)
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn factor(&self, l: usize, r: usize) -> &FactorState {
        &self.factors[l * self.rank + r]
    }

    pub fn factors(&self) -> impl Iterator<Item = (usize, usize, &FactorState)> {
        let rank = self.rank;
        self.factors.iter().enumerate().map(move |(i, f)| (i / rank, i % rank, f))
    }

    /// Largest `‖w̄^{l,r}‖₂` over the grid.
    pub fn max_mean_norm(&self) -> f64 {
        self.factors.iter().map(|f| f.mean.norm()).fold(0.0, f64::max)
    }

    /// Overwrites the mean of factor `(l, r)`. Intended for analytic set-ups;
    /// the accumulator is reset so that `w̄ = σ⁻² Σ b` holds again.
    pub fn set_mean(&mut self, l: usize, r: usize, mean: DVector<f64>) -> Result<()> {
        self.check_index(l, r)?;
        let idx = l * self.rank + r;
        if mean.len() != self.dims[l] {
            return Err(Error::Shape(format!("mean length {} != d_{l} = {}", mean.len(), self.dims[l])));
        }
        let f = &mut self.factors[idx];
        let precision = f
            .covariance
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("covariance is singular".into()))?;
        f.accumulator = precision * &mean * self.noise_variance;
        f.mean = mean;
        Ok(())
    }

    fn check_context(&self, x: &ContextTensor) -> Result<()> {
        if x.order() != self.order() {
            return Err(Error::Shape(format!(
                "context has {} modes, model expects {}",
                x.order(),
                self.order()
            )));
        }
        for (l, (phi, &d)) in x.modes().iter().zip(&self.dims).enumerate() {
            if phi.len() != d {
                return Err(Error::Shape(format!("mode {l}: length {} != {d}", phi.len())));
            }
        }
        Ok(())
    }

    fn check_index(&self, l: usize, r: usize) -> Result<()> {
        if l >= self.order() || r >= self.rank {
            return Err(Error::Contract(format!(
                "factor index ({l}, {r}) outside {}×{} grid",
                self.order(),
                self.rank
            )));
        }
        Ok(())
    }

    /// `φ_lᵀ w̄^{l,r}` for the whole grid, row-major.
    fn projections(&self, x: &ContextTensor) -> Vec<f64> {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, f)| x.mode(i / self.rank).dot(&f.mean))
            .collect()
    }

    fn beta_from(&self, proj: &[f64], l: usize, r: usize) -> f64 {
        (0..self.order())
            .filter(|&m| m != l)
            .map(|m| proj[m * self.rank + r])
            .product()
    }

    fn rank_term(&self, proj: &[f64], r: usize) -> f64 {
        (0..self.order()).map(|m| proj[m * self.rank + r]).product()
    }

    fn pseudo_response_from(&self, proj: &[f64], y: f64, r: usize) -> f64 {
        y - (0..self.rank)
            .filter(|&q| q != r)
            .map(|q| self.rank_term(proj, q))
            .sum::<f64>()
    }

    /// `(W̄, X) = Σ_r Π_l φ_lᵀ w̄^{l,r}`.
    pub fn inner_product(&self, x: &ContextTensor) -> Result<f64> {
        self.check_context(x)?;
        let proj = self.projections(x);
        Ok((0..self.rank).map(|r| self.rank_term(&proj, r)).sum())
    }

    /// `β^{l,r} = Π_{l'≠l} φ_{l'}ᵀ w̄^{l',r}` (indices are zero-based).
    pub fn beta(&self, x: &ContextTensor, l: usize, r: usize) -> Result<f64> {
        self.check_context(x)?;
        self.check_index(l, r)?;
        Ok(self.beta_from(&self.projections(x), l, r))
    }

    /// `y^{l,r} = y − Σ_{r'≠r} (φ_lᵀ w̄^{l,r'}) β^{l,r'}`.
    pub fn pseudo_response(&self, x: &ContextTensor, y: f64, l: usize, r: usize) -> Result<f64> {
        self.check_context(x)?;
        self.check_index(l, r)?;
        Ok(self.pseudo_response_from(&self.projections(x), y, r))
    }

    /// Folds one observation into every factor.
    ///
    /// A single pass over the grid, mode-major then rank: each factor's `β`
    /// and pseudo-response are evaluated from the freshest means, and each
    /// factor receives exactly one rank-1 precision term for this sample.
    pub fn absorb(&mut self, x: &ContextTensor, y: f64) -> Result<Vec<FactorStep>> {
        self.check_context(x)?;
        if !y.is_finite() {
            return Err(Error::Numerical(format!("non-finite response {y}")));
        }
        let mut proj = self.projections(x);
        let mut steps = Vec::with_capacity(self.factors.len());
        for l in 0..self.order() {
            let phi = x.mode(l);
            for r in 0..self.rank {
                let beta = self.beta_from(&proj, l, r);
                let target = self.pseudo_response_from(&proj, y, r);
                let idx = l * self.rank + r;
                let update = self.factors[idx].update(phi, beta, target, self.noise_variance)?;
                proj[idx] = phi.dot(&self.factors[idx].mean);
                steps.push(FactorStep { mode: l, rank: r, beta, pseudo_response: target, update });
            }
        }
        if self.refresh_means {
            self.refresh_all_means();
        }
        Ok(steps)
    }

    /// Re-evaluates `w̄ = σ⁻² Σ b` over the grid in sweep order until the
    /// largest change drops below the tolerance. Returns the sweeps used.
    pub fn refresh_all_means(&mut self) -> usize {
        for sweep in 1..=self.max_sweeps {
            let delta = self
                .factors
                .iter_mut()
                .map(|f| f.refresh_mean(self.noise_variance))
                .fold(0.0, f64::max);
            if delta < self.sweep_tolerance {
                return sweep;
            }
        }
        self.max_sweeps
    }

    /// `(β^{l,r}φ_l)ᵀ Σ^{l,r} (β^{l,r}φ_l)` for the whole grid, row-major.
    pub fn quadratic_forms(&self, x: &ContextTensor) -> Result<Vec<f64>> {
        self.check_context(x)?;
        let proj = self.projections(x);
        Ok(self
            .factors
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let (l, r) = (i / self.rank, i % self.rank);
                f.quadratic_form(x.mode(l), self.beta_from(&proj, l, r))
            })
            .collect())
    }

    /// Gaussian predictive distribution of the response score.
    pub fn predict(&self, x: &ContextTensor) -> Result<Prediction> {
        let mean = self.inner_product(x)?;
        let spread: f64 = self.quadratic_forms(x)?.iter().sum();
        Ok(Prediction { mean, variance: self.noise_variance + spread })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn fresh(dims: Vec<usize>, rank: usize, sigma2: f64) -> SusceptibilityPosterior {
        SusceptibilityPosterior::new(&PosteriorConfig::new(dims, rank, sigma2).without_jitter()).unwrap()
    }

    #[test]
    fn init_rejects_bad_configuration() {
        for cfg in [
            PosteriorConfig::new(vec![], 1, 1.0),
            PosteriorConfig::new(vec![2, 0], 1, 1.0),
            PosteriorConfig::new(vec![2], 0, 1.0),
            PosteriorConfig::new(vec![2], 1, 0.0),
            PosteriorConfig::new(vec![2], 1, -1.0),
        ] {
            assert!(matches!(SusceptibilityPosterior::new(&cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn init_without_jitter_is_ones_and_identity() {
        let p = fresh(vec![2], 1, 1.0);
        assert_eq!(p.factor(0, 0).mean(), &DVector::from_element(2, 1.0));
        assert_eq!(p.factor(0, 0).covariance(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn init_grid_shape() {
        let p = SusceptibilityPosterior::new(&PosteriorConfig::new(vec![2, 2, 2], 2, 0.1)).unwrap();
        assert_eq!(p.factors().count(), 6);
        for (_, _, f) in p.factors() {
            assert_eq!(f.covariance(), &DMatrix::identity(2, 2));
            assert!(f.mean().iter().all(|&v| (v - 1.0).abs() <= 0.01));
        }
    }

    #[test]
    fn init_is_deterministic_in_seed() {
        let cfg = PosteriorConfig::new(vec![3, 4], 3, 0.1).with_seed(42);
        let a = SusceptibilityPosterior::new(&cfg).unwrap();
        let b = SusceptibilityPosterior::new(&cfg).unwrap();
        assert_eq!(a, b);
        let c = SusceptibilityPosterior::new(&cfg.clone().with_seed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn inner_product_direct_case() {
        let mut p = fresh(vec![2, 2], 1, 1.0);
        p.set_mean(0, 0, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        p.set_mean(1, 0, DVector::from_vec(vec![0.0, 1.0])).unwrap();
        let x = ContextTensor::from_slices(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(p.inner_product(&x).unwrap(), 1.0);
        let zero = ContextTensor::from_slices(&[&[0.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(p.inner_product(&zero).unwrap(), 0.0);
    }

    #[test]
    fn shape_errors_are_reported() {
        let p = fresh(vec![2, 3], 1, 1.0);
        let wrong_order = ContextTensor::from_slices(&[&[1.0, 0.0]]).unwrap();
        let wrong_dim = ContextTensor::from_slices(&[&[1.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert!(matches!(p.inner_product(&wrong_order), Err(Error::Shape(_))));
        assert!(matches!(p.predict(&wrong_dim), Err(Error::Shape(_))));
        let x = ContextTensor::from_slices(&[&[1.0, 0.0], &[1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(p.beta(&x, 2, 0), Err(Error::Contract(_))));
        assert!(matches!(p.pseudo_response(&x, 1.0, 0, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn beta_empty_product_is_one() {
        let p = fresh(vec![3], 4, 1.0);
        let x = ContextTensor::from_slices(&[&[0.2, 0.3, 0.1]]).unwrap();
        for r in 0..4 {
            assert_eq!(p.beta(&x, 0, r).unwrap(), 1.0);
        }
    }

    #[test]
    fn beta_dot_product_case() {
        let mut p = fresh(vec![2, 2, 2], 1, 1.0);
        p.set_mean(1, 0, DVector::from_vec(vec![1.0, 2.0])).unwrap();
        p.set_mean(2, 0, DVector::from_vec(vec![0.5, 0.5])).unwrap();
        let x = ContextTensor::from_slices(&[&[0.3, 0.4], &[1.0, 0.0], &[1.0, 1.0]]).unwrap();
        assert_eq!(p.beta(&x, 0, 0).unwrap(), 1.0);
    }

    #[test]
    fn pseudo_response_single_rank_is_response() {
        let p = SusceptibilityPosterior::new(&PosteriorConfig::new(vec![2, 3], 1, 1.0)).unwrap();
        let x = ContextTensor::from_slices(&[&[0.5, 0.1], &[0.2, 0.2, 0.3]]).unwrap();
        assert_eq!(p.pseudo_response(&x, 0.7, 0, 0).unwrap(), 0.7);
        assert_eq!(p.pseudo_response(&x, 0.7, 1, 0).unwrap(), 0.7);
    }

    #[test]
    fn pseudo_response_cancellation() {
        let p = fresh(vec![1, 1], 2, 1.0);
        let x = ContextTensor::from_slices(&[&[1.0], &[1.0]]).unwrap();
        assert_eq!(p.pseudo_response(&x, 1.0, 0, 0).unwrap(), 0.0);
        assert_eq!(p.pseudo_response(&x, 1.0, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn one_step_bayesian_linear_regression() {
        let mut p = fresh(vec![2], 1, 1.0);
        let x = ContextTensor::from_slices(&[&[1.0, 0.0]]).unwrap();
        p.absorb(&x, 1.0).unwrap();
        let f = p.factor(0, 0);
        assert_eq!(f.covariance(), &DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0])));
        assert_eq!(f.mean(), &DVector::from_vec(vec![0.5, 0.0]));
    }

    #[test]
    fn zero_information_sample_keeps_means() {
        // φ₁ = 0 and φ₂ is orthogonal to every mode-2 mean, so all β vanish.
        let mut p = fresh(vec![2, 2], 2, 0.5);
        for r in 0..2 {
            p.set_mean(1, r, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        }
        let x = ContextTensor::from_slices(&[&[0.0, 0.0], &[0.0, 1.0]]).unwrap();
        let y = p.inner_product(&x).unwrap();
        let before: Vec<_> = p.factors().map(|(_, _, f)| f.mean().clone()).collect();
        let steps = p.absorb(&x, y).unwrap();
        assert!(steps.iter().all(|s| s.beta == 0.0 && !s.update.applied));
        let after: Vec<_> = p.factors().map(|(_, _, f)| f.mean().clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn predict_identity_covariance_case() {
        let p = fresh(vec![2, 2], 1, 0.1);
        let x = ContextTensor::from_slices(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let pred = p.predict(&x).unwrap();
        assert_eq!(pred.mean, 1.0);
        assert!((pred.variance - 2.1).abs() < 1e-12);
    }

    #[test]
    fn predict_all_zero_context() {
        let p = SusceptibilityPosterior::new(&PosteriorConfig::new(vec![2, 3], 2, 0.25)).unwrap();
        let x = ContextTensor::from_slices(&[&[0.0, 0.0], &[0.0, 0.0, 0.0]]).unwrap();
        let pred = p.predict(&x).unwrap();
        assert_eq!(pred.mean, 0.0);
        assert_eq!(pred.variance, 0.25);
    }

    #[test]
    fn refresh_converges_immediately_on_consistent_state() {
        let mut cfg = PosteriorConfig::new(vec![3, 2], 2, 0.2);
        cfg.refresh_means = true;
        let mut p = SusceptibilityPosterior::new(&cfg).unwrap();
        let x = ContextTensor::from_slices(&[&[0.2, 0.5, 0.1], &[0.6, 0.3]]).unwrap();
        p.absorb(&x, 1.0).unwrap();
        assert_eq!(p.refresh_all_means(), 1);
    }
}
