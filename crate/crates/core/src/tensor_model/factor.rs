use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Gaussian factor `q(w^{l,r}) = N(w̄, Σ)` together with its data accumulator `b`.
///
/// The covariance is maintained directly (no inversion); each sample folds in
/// one rank-1 precision term through the Woodbury identity.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    pub(crate) mean: DVector<f64>,
    pub(crate) covariance: DMatrix<f64>,
    pub(crate) accumulator: DVector<f64>,
    /// `ln det Σ⁻¹ = Σ_τ ln(1 + κ_τ²/σ²)`, accumulated update by update.
    pub(crate) log_det_precision: f64,
    pub(crate) updates: u64,
}

/// What a single factor update did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorUpdate {
    /// `κ = sqrt((βφ)ᵀ Σ (βφ))` evaluated with the covariance before the update.
    pub kappa: f64,
    pub applied: bool,
}

impl FactorState {
    /// Identity covariance, the given mean, and an empty accumulator.
    pub fn with_mean(mean: DVector<f64>) -> Self {
        let d = mean.len();
        Self {
            mean,
            covariance: DMatrix::identity(d, d),
            accumulator: DVector::zeros(d),
            log_det_precision: 0.0,
            updates: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn accumulator(&self) -> &DVector<f64> {
        &self.accumulator
    }

    pub fn log_det_precision(&self) -> f64 {
        self.log_det_precision
    }

    /// Number of non-trivial (β ≠ 0) updates absorbed.
    pub fn update_count(&self) -> u64 {
        self.updates
    }

    /// `(βφ)ᵀ Σ (βφ)`.
    pub fn quadratic_form(&self, phi: &DVector<f64>, beta: f64) -> f64 {
        let q = phi.dot(&(&self.covariance * phi));
        beta * beta * q
    }

    /// Absorbs one sample with effective weight `beta` and pseudo-response `target`.
    ///
    /// `Σ ← Σ − Σvvᵀ Σ / (σ² + vᵀΣv)` with `v = βφ`, then `b ← b + φ β y`,
    /// `w̄ = σ⁻² Σ b`. A zero `beta` leaves the state untouched.
    pub fn update(
        &mut self,
        phi: &DVector<f64>,
        beta: f64,
        target: f64,
        noise_variance: f64,
    ) -> Result<FactorUpdate> {
        if phi.len() != self.dim() {
            return Err(Error::Shape(format!(
                "feature length {} does not match factor dimension {}",
                phi.len(),
                self.dim()
            )));
        }
        // A non-finite φ surfaces below through κ² unless β = 0.
        let phi_bad = beta == 0.0 && phi.iter().any(|v| !v.is_finite());
        if !beta.is_finite() || !target.is_finite() || phi_bad {
            return Err(Error::Numerical(format!(
                "non-finite update input (beta={beta}, target={target})"
            )));
        }
        if beta == 0.0 {
            return Ok(FactorUpdate { kappa: 0.0, applied: false });
        }

        // Σv with v = βφ; Σ is symmetric so vᵀΣv = β φᵀ(Σv).
        let mut sv = DVector::zeros(self.dim());
        scaled_matvec(&mut sv, beta, &self.covariance, phi);
        let kappa_sq = beta * phi.dot(&sv);
        let denom = noise_variance + kappa_sq;
        if !denom.is_finite() || !kappa_sq.is_finite() || kappa_sq < 0.0 {
            return Err(Error::Numerical(format!("degenerate Woodbury denominator {denom}")));
        }
        // Diagonal of the downdated covariance must stay positive.
        let inv = 1.0 / denom;
        let n = self.dim();
        let diag = self.covariance.as_slice().iter().step_by(n + 1);
        if let Some(i) = diag.zip(sv.iter()).position(|(&c, &v)| c - v * v * inv <= 0.0) {
            return Err(Error::Consistency(format!("covariance lost positive definiteness at diagonal {i}")));
        }

        symmetric_downdate(&mut self.covariance, &sv, inv);
        self.accumulator.axpy(beta * target, phi, 1.0);
        scaled_matvec(&mut self.mean, 1.0 / noise_variance, &self.covariance, &self.accumulator);
        // NaN and ±∞ both poison the sum.
        if !self.mean.sum().is_finite() {
            return Err(Error::Numerical("posterior mean became non-finite".into()));
        }
        self.log_det_precision += (kappa_sq / noise_variance).ln_1p();
        self.updates += 1;
        Ok(FactorUpdate { kappa: kappa_sq.sqrt(), applied: true })
    }

    /// Recomputes `w̄ = σ⁻² Σ b` and returns the max-abs change.
    pub(crate) fn refresh_mean(&mut self, noise_variance: f64) -> f64 {
        let fresh = (&self.covariance * &self.accumulator) / noise_variance;
        let delta = (&fresh - &self.mean).amax();
        self.mean = fresh;
        delta
    }
}

/// `m ← m − s·uuᵀ`. Each correction is `(uᵢuⱼ)·s`; the product is
/// commutative in floating point, so entries `(i, j)` and `(j, i)` change
/// identically and `m` stays exactly symmetric.
fn symmetric_downdate(m: &mut DMatrix<f64>, u: &DVector<f64>, s: f64) {
    let n = m.nrows();
    let u = u.as_slice();
    for (col, &uj) in m.as_mut_slice().chunks_exact_mut(n).zip(u) {
        for (c, &ui) in col.iter_mut().zip(u) {
            *c -= (ui * uj) * s;
        }
    }
}

/// `out ← α·m·x` for a column-major square `m`, as a sum of scaled columns.
fn scaled_matvec(out: &mut DVector<f64>, alpha: f64, m: &DMatrix<f64>, x: &DVector<f64>) {
    let n = m.nrows();
    let out = out.as_mut_slice();
    out.fill(0.0);
    for (col, &xj) in m.as_slice().chunks_exact(n).zip(x.iter()) {
        let a = alpha * xj;
        for (o, &v) in out.iter_mut().zip(col) {
            *o += a * v;
        }
    }
}
