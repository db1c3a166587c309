use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Columns whose spread falls below this are treated as having unit scale
/// after centering, so they standardize to zeros.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-column affine map to zero mean and unit population std.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub(crate) fn check_matrix(rows: &[Vec<f64>]) -> Result<usize> {
    let d = rows.first().ok_or(Error::Empty("feature matrix"))?.len();
    if d == 0 {
        return Err(Error::Empty("feature row"));
    }
    for r in rows {
        if r.len() != d {
            return Err(Error::FeatureMismatch { expected: d, got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix"));
        }
    }
    Ok(d)
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let d = check_matrix(rows)?;
        if rows.len() < 2 {
            return Err(Error::TooShort { needed: "2 rows".into(), got: format!("{}", rows.len()) });
        }
        let n = rows.len() as f64;
        let mut mean = alloc::vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = alloc::vec![0.0; d];
        for r in rows {
            for k in 0..d {
                var[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
            }
        }
        let std = var.into_iter().map(|v| libm::sqrt(v / n).max(STD_FLOOR)).collect();
        Ok(Standardizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::FeatureMismatch { expected: self.dim(), got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature row"));
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

pub fn standardize_fit_apply(rows: &[Vec<f64>]) -> Result<(Standardizer, Vec<Vec<f64>>)> {
    let s = Standardizer::fit(rows)?;
    let z = s.transform(rows)?;
    Ok((s, z))
}
