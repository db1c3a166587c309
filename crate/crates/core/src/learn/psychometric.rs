use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const ALPHA_RANGE: (f64, f64) = (0.0, 30.0);
pub const BETA_RANGE: (f64, f64) = (0.1, 30.0);

/// Logistic detection curve `p(x) = 1 / (1 + exp(-(x - α) / β))`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Psychometric {
    pub alpha: f64,
    pub beta: f64,
    pub log_likelihood: f64,
}

pub fn logistic(x: f64, alpha: f64, beta: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-(x - alpha) / beta))
}

impl Psychometric {
    pub fn p(&self, x: f64) -> f64 {
        logistic(x, self.alpha, self.beta)
    }
}

/// Binned responses: (magnitude, yes count, total).
fn bin(magnitudes: &[f64], noticed: &[bool]) -> Vec<(f64, f64, f64)> {
    let mut bins: Vec<(f64, f64, f64)> = Vec::new();
    for (m, y) in magnitudes.iter().zip(noticed) {
        let yes = if *y { 1.0 } else { 0.0 };
        match bins.iter_mut().find(|b| b.0 == *m) {
            Some(b) => {
                b.1 += yes;
                b.2 += 1.0;
            }
            None => bins.push((*m, yes, 1.0)),
        }
    }
    bins
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

fn log_lik(bins: &[(f64, f64, f64)], alpha: f64, beta: f64) -> f64 {
    bins.iter()
        .map(|&(x, k, n)| {
            let z = (x - alpha) / beta;
            // log σ(z) and log(1 − σ(z)) without saturating
            -k * softplus(-z) - (n - k) * softplus(z)
        })
        .sum()
}

/// Maximum-likelihood fit: coarse grid over α ∈ [0, 30], β ∈ [0.1, 30],
/// then a shrinking pattern search around the best grid point.
pub fn psychometric_fit(magnitudes: &[f64], noticed: &[bool]) -> Result<Psychometric> {
    if magnitudes.len() != noticed.len() {
        return Err(Error::Invalid(format!("{} magnitudes but {} responses", magnitudes.len(), noticed.len())));
    }
    if magnitudes.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("magnitudes"));
    }
    let bins = bin(magnitudes, noticed);
    if bins.len() < 2 {
        return Err(Error::TooShort { needed: "2 distinct magnitudes".into(), got: format!("{}", bins.len()) });
    }
    if noticed.iter().all(|y| *y) || noticed.iter().all(|y| !*y) {
        return Err(Error::Degenerate("all responses identical"));
    }

    let (a0, a1) = ALPHA_RANGE;
    let (b0, b1) = BETA_RANGE;
    let mut best = (a0, b0, f64::NEG_INFINITY);
    for ia in 0..=120 {
        let a = a0 + (a1 - a0) * ia as f64 / 120.0;
        for ib in 0..=119 {
            let b = b0 + (b1 - b0) * ib as f64 / 119.0;
            let ll = log_lik(&bins, a, b);
            if ll > best.2 {
                best = (a, b, ll);
            }
        }
    }
    let (mut sa, mut sb) = ((a1 - a0) / 120.0, (b1 - b0) / 119.0);
    for _ in 0..60 {
        let mut moved = false;
        for (da, db) in [(sa, 0.0), (-sa, 0.0), (0.0, sb), (0.0, -sb), (sa, sb), (-sa, -sb), (sa, -sb), (-sa, sb)] {
            let a = (best.0 + da).clamp(a0, a1);
            let b = (best.1 + db).clamp(b0, b1);
            let ll = log_lik(&bins, a, b);
            if ll > best.2 {
                best = (a, b, ll);
                moved = true;
            }
        }
        if !moved {
            sa *= 0.5;
            sb *= 0.5;
        }
    }
    Ok(Psychometric { alpha: best.0, beta: best.1, log_likelihood: best.2 })
}
