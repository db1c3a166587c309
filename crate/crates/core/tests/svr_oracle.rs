//! SVR checked against an independent projected-gradient solver of the
//! same dual, plus a KKT audit on random problems.

use gazenotice_core::features::FeatureSet;
use gazenotice_core::learn::{svr_train, SvrModel, SvrParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set(d: usize) -> FeatureSet {
    FeatureSet::from_indices(&(0..d).collect::<Vec<_>>()).unwrap()
}

fn kernel(z: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    z.iter()
        .map(|a| z.iter().map(|b| (-gamma * a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>()).exp()).collect())
        .collect()
}

/// Accelerated proximal gradient on β for
/// `½βᵀKβ − yᵀβ + ε‖β‖₁  s.t. Σβ = 0, |β| ≤ C`.
/// The prox is exact: `β(μ) = clip(soft(v − μ, sε), −C, C)` with μ found by bisection.
fn qp_oracle(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let lip = k.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = 1.0 / lip;
    let prox = |v: &[f64]| -> Vec<f64> {
        let at = |mu: f64| -> Vec<f64> {
            v.iter()
                .map(|vi| {
                    let w = vi - mu;
                    let soft = w.signum() * (w.abs() - s * eps).max(0.0);
                    soft.clamp(-c, c)
                })
                .collect()
        };
        let (mut lo, mut hi) = (-100.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).iter().sum::<f64>() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi))
    };
    let mut beta = vec![0.0; n];
    let mut z = beta.clone();
    let mut t: f64 = 1.0;
    for _ in 0..50_000 {
        let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * z[j]).sum::<f64>() - y[i]).collect();
        let v: Vec<f64> = (0..n).map(|i| z[i] - s * grad[i]).collect();
        let next = prox(&v);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = (0..n).map(|i| next[i] + (t - 1.0) / t_next * (next[i] - beta[i])).collect();
        beta = next;
        t = t_next;
    }
    // bias from free coefficients (residual sits on the tube edge)
    let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum()).collect();
    let free: Vec<f64> = (0..n)
        .filter(|&i| beta[i].abs() > 1e-6 && beta[i].abs() < c - 1e-6)
        .map(|i| y[i] - g[i] - eps * beta[i].signum())
        .collect();
    assert!(!free.is_empty(), "oracle instance should have free support vectors");
    let b = free.iter().sum::<f64>() / free.len() as f64;
    (beta, b)
}

fn dual_objective(k: &[Vec<f64>], y: &[f64], eps: f64, beta: &[f64]) -> f64 {
    let n = y.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += beta[i] * k[i][j] * beta[j];
        }
    }
    0.5 * q - y.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + eps * beta.iter().map(|b| b.abs()).sum::<f64>()
}

fn full_beta(m: &SvrModel, n: usize) -> Vec<f64> {
    let mut beta = vec![0.0; n];
    for (i, b) in m.support_indices.iter().zip(&m.dual_coef) {
        beta[*i] = *b;
    }
    beta
}

#[test]
fn one_dimensional_instance_matches_exact_qp() {
    let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
    let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
    let params = SvrParams::default();
    let m = svr_train(&rows, &xs, set(1), &params).unwrap();
    let z = m.standardizer.transform(&rows).unwrap();
    let k = kernel(&z, m.gamma);
    let (beta, b) = qp_oracle(&k, &xs, params.c, params.epsilon);

    let smo_beta = full_beta(&m, 20);
    let f_smo = dual_objective(&k, &xs, params.epsilon, &smo_beta);
    let f_qp = dual_objective(&k, &xs, params.epsilon, &beta);
    assert!(f_smo - f_qp < 1e-3, "SMO objective {f_smo} vs exact {f_qp}");
    assert!(smo_beta.iter().sum::<f64>().abs() < 1e-9);

    for (i, x) in xs.iter().enumerate() {
        let exact = (0..20).map(|j| k[i][j] * beta[j]).sum::<f64>() + b;
        let ours = m.predict_row(&[*x]).unwrap();
        assert!((ours - exact).abs() <= params.epsilon + 0.05, "x={x}: {ours} vs {exact}");
        assert!((ours - x).abs() <= params.epsilon + 0.05);
    }
}

#[test]
fn kkt_audit_on_random_problems() {
    let tol = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let n = rng.random_range(5..40);
        let d = rng.random_range(1..6);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()).collect();
        let labels: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let params = SvrParams { c: [0.5, 1.0, 4.0][case % 3], ..SvrParams::default() };
        let m = svr_train(&rows, &labels, set(d), &params).unwrap();
        assert!(m.support_vectors.len() <= n);
        let beta = full_beta(&m, n);
        assert!(beta.iter().sum::<f64>().abs() < 1e-9);
        for i in 0..n {
            assert!(beta[i].abs() <= params.c + 1e-8);
            let r = labels[i] - m.predict_raw(&rows[i]).unwrap();
            let eps = params.epsilon;
            if beta[i] == 0.0 {
                assert!(r.abs() <= eps + tol, "case {case} row {i}: zero dual but |r| = {}", r.abs());
            } else {
                assert!(r.abs() >= eps - tol, "case {case} row {i}: dual {} inside tube |r| = {}", beta[i], r.abs());
                assert!(r * beta[i] > 0.0);
                if beta[i].abs() < params.c {
                    assert!(r.abs() <= eps + tol);
                }
            }
            let p = m.predict_row(&rows[i]).unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows: Vec<Vec<f64>> = (0..25).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    let labels: Vec<f64> = (0..25).map(|_| rng.random::<f64>()).collect();
    let a = svr_train(&rows, &labels, set(3), &SvrParams::default()).unwrap();
    let b = svr_train(&rows, &labels, set(3), &SvrParams::default()).unwrap();
    assert_eq!(a, b);
}
