//! Small descriptive statistics shared across modules.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation (divides by `n`).
    pub std: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median of an unsorted slice; midpoint of the middle pair for even lengths.
/// Returns NaN for empty input.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn summary_stats(xs: &[f64]) -> Result<Summary> {
    if xs.is_empty() {
        return Err(Error::Empty("series for summary statistics"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("series for summary statistics"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = mean(&v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    Ok(Summary {
        mean: m,
        std: libm::sqrt(var),
        median: median_sorted(&v),
        max: v[v.len() - 1],
        min: v[0],
    })
}

/// Pearson product-moment correlation.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Invalid(alloc::format!(
            "paired series lengths differ ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::TooShort {
            needed: "3 pairs".into(),
            got: alloc::format!("{}", xs.len()),
        });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::ZeroVariance("correlation input"));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_series() {
        let s = summary_stats(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(s, Summary { mean: 2.0, std: 0.0, median: 2.0, max: 2.0, min: 2.0 });
    }

    #[test]
    fn one_to_four() {
        let s = summary_stats(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.118033988749895).abs() < 1e-12);
        assert_eq!(s.median, 2.5);
        assert_eq!((s.max, s.min), (4.0, 1.0));
    }

    #[test]
    fn empty_is_error() {
        assert!(summary_stats(&[]).is_err());
    }

    #[test]
    fn pearson_edge_cases() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson_r(&xs, &ys).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson_r(&xs, &[1.0; 5]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pearson_independent_noise_is_small() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        assert!(pearson_r(&xs, &ys).unwrap().abs() < 0.1);
    }

    fn pearson_oracle(xs: &[f64], ys: &[f64]) -> f64 {
        // textbook single-pass formula, independent of the centered implementation
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let syy: f64 = ys.iter().map(|y| y * y).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
        (n * sxy - sx * sy) / libm::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy))
    }

    proptest! {
        #[test]
        fn summary_matches_sort_oracle(xs in proptest::collection::vec(-100.0f64..100.0, 1..50)) {
            let s = summary_stats(&xs).unwrap();
            let mut v = xs.clone();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = v.len();
            let med = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
            prop_assert_eq!(s.median, med);
            prop_assert_eq!(s.min, v[0]);
            prop_assert_eq!(s.max, v[n - 1]);
            let m = v.iter().sum::<f64>() / n as f64;
            prop_assert!((s.mean - m).abs() < 1e-9);
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
            prop_assert!((s.std - var.sqrt()).abs() < 1e-9);
            prop_assert!(s.min <= s.median && s.median <= s.max);
        }

        #[test]
        fn pearson_matches_oracle(pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40)) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let Ok(r) = pearson_r(&xs, &ys) {
                prop_assert!((-1.0..=1.0).contains(&r));
                prop_assert!((r - pearson_oracle(&xs, &ys)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 10.0]), 2.5);
    }
}
