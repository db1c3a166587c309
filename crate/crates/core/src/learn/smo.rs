//! Sequential minimal optimization for the box- and equality-constrained
//! dual shared by C-SVC and ε-SVR:
//!
//! ```text
//! min  ½ αᵀQα + pᵀα   s.t.  yᵀα = 0,  0 ≤ α ≤ C,   Q_ij = y_i y_j K_ij
//! ```
//!
//! Working pairs are chosen by maximal violation for `i` and second-order
//! gain for `j`. The kernel matrix is precomputed.

use alloc::vec;
use alloc::vec::Vec;

const TAU: f64 = 1e-12;

pub(crate) struct Problem<'a> {
    /// Kernel over variables (not yet multiplied by labels), row-major `n × n`.
    pub k: &'a [f64],
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub c: f64,
    pub tol: f64,
}

pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub rho: f64,
}

pub(crate) fn solve(pr: &Problem<'_>) -> Solution {
    let n = pr.p.len();
    let k = |i: usize, j: usize| pr.k[i * n + j];
    let y = &pr.y;
    let c = pr.c;
    let mut alpha = vec![0.0; n];
    let mut g = pr.p.clone();
    let max_iter = (100 * n).max(100_000);
    let mut iterations = 0;

    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * g[t] > gmax {
                i = t;
                gmax = -y[t] * g[t];
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * g[t];
            gmin = gmin.min(v);
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let mut a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain < best {
                    best = gain;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < pr.tol {
            break;
        }
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * k(i, j);
        if y[i] != y[j] {
            let mut quad = k(i, i) + k(j, j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k(i, i) + k(j, j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            g[t] += y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
    }

    // rho from free variables, else the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum += yg;
            free += 1;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { 0.5 * (ub + lb) };
    Solution { alpha, rho }
}

/// `exp(-γ‖a − b‖²)`
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    libm::exp(-gamma * d2)
}

pub(crate) fn gram(rows: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = rows.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(&rows[i], &rows[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Default RBF width: `1 / (d · Var)` with `Var` the variance of every entry
/// of the (standardized) training matrix; falls back to `1 / d`.
pub fn default_gamma(rows: &[Vec<f64>]) -> f64 {
    let d = rows.first().map_or(1, Vec::len).max(1) as f64;
    let all: Vec<f64> = rows.iter().flatten().copied().collect();
    if all.is_empty() {
        return 1.0 / d;
    }
    let m = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / all.len() as f64;
    if var > 1e-12 {
        1.0 / (d * var)
    } else {
        1.0 / d
    }
}
