use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::smo::{default_gamma, gram, rbf, solve, Problem};
use super::standardize::{check_matrix, Standardizer};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` picks `1 / (d · Var)` on the standardized rows.
    pub gamma: Option<f64>,
    pub tol: f64,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams { c: 1.0, epsilon: 0.1, gamma: None, tol: 1e-3 }
    }
}

/// ε-insensitive RBF support vector regressor with a [0, 1] output clamp.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvrModel {
    pub feature_set: FeatureSet,
    pub standardizer: Standardizer,
    pub gamma: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Standardized training rows with a nonzero dual coefficient.
    pub support_vectors: Vec<Vec<f64>>,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    /// `α_i − α*_i`, one per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
}

pub fn svr_train(rows: &[Vec<f64>], labels: &[f64], feature_set: FeatureSet, params: &SvrParams) -> Result<SvrModel> {
    let d = check_matrix(rows)?;
    if d != feature_set.len() {
        return Err(Error::FeatureMismatch { expected: feature_set.len(), got: d });
    }
    if labels.len() != rows.len() {
        return Err(Error::Invalid(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    if labels.iter().any(|y| !(0.0..=1.0).contains(y)) {
        return Err(Error::Invalid("regression labels must lie in [0, 1]".into()));
    }
    if !(params.c > 0.0 && params.epsilon >= 0.0 && params.tol > 0.0) {
        return Err(Error::Invalid("SVR needs C > 0, ε ≥ 0, tol > 0".into()));
    }
    let standardizer = Standardizer::fit(rows)?;
    let z = standardizer.transform(rows)?;
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(&z));
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Invalid(format!("RBF gamma {gamma} must be positive")));
    }

    let l = z.len();
    let kl = gram(&z, gamma);
    let n = 2 * l;
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = kl[(i % l) * l + j % l];
        }
    }
    let mut p = Vec::with_capacity(n);
    p.extend(labels.iter().map(|y| params.epsilon - y));
    p.extend(labels.iter().map(|y| params.epsilon + y));
    let mut y = vec![1.0; l];
    y.extend(core::iter::repeat_n(-1.0, l));
    let sol = solve(&Problem { k: &k, p, y, c: params.c, tol: params.tol });

    let mut support_vectors = Vec::new();
    let mut support_indices = Vec::new();
    let mut dual_coef = Vec::new();
    for (i, zi) in z.iter().enumerate() {
        let beta = sol.alpha[i] - sol.alpha[i + l];
        if beta != 0.0 {
            support_vectors.push(zi.clone());
            support_indices.push(i);
            dual_coef.push(beta);
        }
    }
    Ok(SvrModel {
        feature_set,
        standardizer,
        gamma,
        c: params.c,
        epsilon: params.epsilon,
        support_vectors,
        support_indices,
        dual_coef,
        bias: -sol.rho,
    })
}

impl SvrModel {
    /// Unclamped regression output for a row in the model's feature order.
    pub fn predict_raw(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.feature_set.len() {
            return Err(Error::FeatureMismatch { expected: self.feature_set.len(), got: row.len() });
        }
        let z = self.standardizer.transform_row(row)?;
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, b)| b * rbf(sv, &z, self.gamma))
            .sum();
        Ok(s + self.bias)
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        Ok(self.predict_raw(row)?.clamp(0.0, 1.0))
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<f64> {
        self.predict_row(&self.feature_set.select(features))
    }
}

pub fn svr_predict(model: &SvrModel, row: &[f64]) -> Result<f64> {
    model.predict_row(row)
}
