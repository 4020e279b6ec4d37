use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FactorState, SusceptibilityPosterior};
use crate::error::{Error, Result};

pub const SNAPSHOT_VERSION: u32 = 1;

/// Versioned, flattened posterior for campaign resume.
///
/// Factors are listed row-major over the `D × R` grid; covariances are
/// stored row-major as `d_l²` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSnapshot {
    pub version: u32,
    pub dims: Vec<usize>,
    pub rank: usize,
    pub noise_variance: f64,
    pub jitter_scale: f64,
    pub sweep_tolerance: f64,
    pub max_sweeps: usize,
    pub refresh_means: bool,
    pub factors: Vec<FactorSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSnapshot {
    pub mean: Vec<f64>,
    pub covariance: Vec<f64>,
    pub accumulator: Vec<f64>,
    pub log_det_precision: f64,
    pub updates: u64,
}

impl SusceptibilityPosterior {
    pub fn snapshot(&self) -> PosteriorSnapshot {
        PosteriorSnapshot {
            version: SNAPSHOT_VERSION,
            dims: self.dims.clone(),
            rank: self.rank,
            noise_variance: self.noise_variance,
            jitter_scale: self.jitter_scale,
            sweep_tolerance: self.sweep_tolerance,
            max_sweeps: self.max_sweeps,
            refresh_means: self.refresh_means,
            factors: self
                .factors
                .iter()
                .map(|f| FactorSnapshot {
                    mean: f.mean.as_slice().to_vec(),
                    covariance: f.covariance.transpose().as_slice().to_vec(),
                    accumulator: f.accumulator.as_slice().to_vec(),
                    log_det_precision: f.log_det_precision,
                    updates: f.updates,
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snap: PosteriorSnapshot) -> Result<Self> {
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Data(format!(
                "unsupported snapshot version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        if snap.dims.is_empty() || snap.dims.contains(&0) || snap.rank == 0 {
            return Err(Error::Data("snapshot has an empty grid".into()));
        }
        if !(snap.noise_variance > 0.0) {
            return Err(Error::Data("snapshot noise variance must be positive".into()));
        }
        if snap.factors.len() != snap.dims.len() * snap.rank {
            return Err(Error::Data(format!(
                "snapshot has {} factors, expected {}",
                snap.factors.len(),
                snap.dims.len() * snap.rank
            )));
        }
        let mut factors = Vec::with_capacity(snap.factors.len());
        for (i, f) in snap.factors.into_iter().enumerate() {
            let d = snap.dims[i / snap.rank];
            if f.mean.len() != d || f.accumulator.len() != d || f.covariance.len() != d * d {
                return Err(Error::Data(format!("factor {i} does not match dimension {d}")));
            }
            factors.push(FactorState {
                mean: DVector::from_vec(f.mean),
                covariance: DMatrix::from_row_slice(d, d, &f.covariance),
                accumulator: DVector::from_vec(f.accumulator),
                log_det_precision: f.log_det_precision,
                updates: f.updates,
            });
        }
        Ok(Self {
            dims: snap.dims,
            rank: snap.rank,
            noise_variance: snap.noise_variance,
            factors,
            jitter_scale: snap.jitter_scale,
            sweep_tolerance: snap.sweep_tolerance,
            max_sweeps: snap.max_sweeps,
            refresh_means: snap.refresh_means,
        })
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, &self.snapshot())?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        Self::from_snapshot(serde_json::from_reader(reader)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_model::{ContextTensor, PosteriorConfig};

    #[test]
    fn json_round_trip_preserves_state() {
        let mut p = SusceptibilityPosterior::new(&PosteriorConfig::new(vec![2, 3], 2, 0.1).with_seed(5)).unwrap();
        let x = ContextTensor::from_slices(&[&[0.3, 0.4], &[0.1, 0.5, 0.2]]).unwrap();
        p.absorb(&x, 1.0).unwrap();
        p.absorb(&x, 0.0).unwrap();
        let mut buf = Vec::new();
        p.write_json(&mut buf).unwrap();
        let q = SusceptibilityPosterior::read_json(buf.as_slice()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn rejects_wrong_version_and_shape() {
        let p = SusceptibilityPosterior::new(&PosteriorConfig::new(vec![2], 1, 0.1)).unwrap();
        let mut snap = p.snapshot();
        snap.version = 99;
        assert!(SusceptibilityPosterior::from_snapshot(snap).is_err());
        let mut snap = p.snapshot();
        snap.factors[0].covariance.pop();
        assert!(SusceptibilityPosterior::from_snapshot(snap).is_err());
    }
}
