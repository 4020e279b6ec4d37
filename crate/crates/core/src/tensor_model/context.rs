use nalgebra::DVector;

use crate::error::{Error, Result};

/// Rank-1 context `φ₁ ∘ φ₂ ∘ … ∘ φ_D`, kept in factored form.
///
/// The dense tensor is never materialized; every model operation only
/// needs the per-mode inner products with factor vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTensor {
    modes: Vec<DVector<f64>>,
}

impl ContextTensor {
    pub fn new(modes: Vec<DVector<f64>>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Shape("context tensor needs at least one mode".into()));
        }
        for (l, phi) in modes.iter().enumerate() {
            if phi.is_empty() {
                return Err(Error::Shape(format!("mode {l} has zero dimension")));
            }
            if phi.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("mode {l} has non-finite entries")));
            }
        }
        Ok(Self { modes })
    }

    /// Builds a context after scaling every mode to `‖φ_l‖₂ ≤ 1`.
    pub fn normalized(modes: Vec<DVector<f64>>) -> Result<Self> {
        Self::new(modes.into_iter().map(clamp_norm).collect())
    }

    pub fn from_slices(modes: &[&[f64]]) -> Result<Self> {
        Self::new(modes.iter().map(|m| DVector::from_column_slice(m)).collect())
    }

    pub fn order(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, l: usize) -> &DVector<f64> {
        &self.modes[l]
    }

    pub fn modes(&self) -> &[DVector<f64>] {
        &self.modes
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.len()).collect()
    }

    /// Concatenation `φ₁ ⊕ … ⊕ φ_D` rescaled to unit norm (zero stays zero).
    pub fn concatenated(&self) -> DVector<f64> {
        let values: Vec<f64> = self.modes.iter().flat_map(|m| m.iter().copied()).collect();
        let v = DVector::from_vec(values);
        let norm = v.norm();
        if norm > 0.0 {
            v / norm
        } else {
            v
        }
    }
}

/// Scale `v` down so that its Euclidean norm is at most one.
pub fn clamp_norm(v: DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    if norm > 1.0 {
        v / norm
    } else {
        v
    }
}
