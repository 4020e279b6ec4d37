//! Feature tables for users and products, with CSV-style loaders.

use std::io::BufRead;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::tensor_model::clamp_norm;

/// Feature vectors indexed by id; every row has the same dimension and
/// norm at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    rows: Vec<Option<DVector<f64>>>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: Vec::new() }
    }

    /// Dense table from vectors indexed `0..len`; rows are norm-clamped.
    pub fn from_rows(rows: Vec<DVector<f64>>) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut table = Self::new(dim);
        for (id, row) in rows.into_iter().enumerate() {
            table.insert(id, row)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, id: usize, row: DVector<f64>) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Data(format!("feature row {id} has length {}, expected {}", row.len(), self.dim)));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("feature row {id} has non-finite values")));
        }
        if id >= self.rows.len() {
            self.rows.resize(id + 1, None);
        }
        self.rows[id] = Some(clamp_norm(row));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of addressable ids (one past the largest id).
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(Option::is_none)
    }

    pub fn get(&self, id: usize) -> Option<&DVector<f64>> {
        self.rows.get(id).and_then(Option::as_ref)
    }

    pub fn require(&self, id: usize) -> Result<&DVector<f64>> {
        self.get(id).ok_or_else(|| Error::Data(format!("no features for id {id}")))
    }

    /// Ids with a row, ascending.
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().enumerate().filter_map(|(i, r)| r.as_ref().map(|_| i))
    }

    /// Parses `id,v1,…,vd` lines; `#` lines and blanks are skipped.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut table: Option<Self> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split(',').map(str::trim);
            let id_field = fields.next().unwrap_or_default();
            let id = id_field
                .parse::<usize>()
                .map_err(|e| Error::Parse { line: lineno, message: format!("bad id {id_field:?}: {e}") })?;
            let values = fields
                .map(|f| f.parse::<f64>().map_err(|e| Error::Parse { line: lineno, message: format!("bad value {f:?}: {e}") }))
                .collect::<Result<Vec<f64>>>()?;
            if values.is_empty() {
                return Err(Error::Parse { line: lineno, message: "row has no feature values".into() });
            }
            let t = table.get_or_insert_with(|| Self::new(values.len()));
            if t.get(id).is_some() {
                return Err(Error::Parse { line: lineno, message: format!("duplicate id {id}") });
            }
            t.insert(id, DVector::from_vec(values))
                .map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        }
        table.ok_or_else(|| Error::Data("feature file has no rows".into()))
    }
}
