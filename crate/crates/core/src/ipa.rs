//! Index of Pupillary Activity: the rate of large, sharp changes in pupil
//! diameter, found as modulus maxima of level-2 wavelet details that clear
//! the universal threshold.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::GazeSample;
use crate::stats::median;
use crate::wavelet::modwt;

/// Minimum series length for the wavelet stage.
pub const MIN_IPA_SAMPLES: usize = 64;
const DETAIL_LEVEL: usize = 2;
/// Detail magnitudes at or below this fraction of the signal's largest
/// absolute value are rounding noise and never count as maxima.
const RELATIVE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PupilSource {
    Left,
    Right,
    Mean,
}

/// Uniformly sampled, gap-free pupil diameter series.
#[derive(Debug, Clone, PartialEq)]
pub struct PupilSeries {
    pub t: Vec<f64>,
    pub diameter: Vec<f64>,
    pub source: PupilSource,
    /// Nominal rate in Hz.
    pub rate: f64,
}

impl PupilSeries {
    /// Builds a series from uniformly spaced values starting at `t0`.
    pub fn uniform(t0: f64, rate: f64, diameter: Vec<f64>) -> Self {
        let t = (0..diameter.len()).map(|k| t0 + k as f64 / rate).collect();
        PupilSeries { t, diameter, source: PupilSource::Mean, rate }
    }

    pub fn len(&self) -> usize {
        self.diameter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diameter.is_empty()
    }

    /// Duration covered, counting one sample period per value.
    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.rate
    }

    fn slice(&self, start: usize, len: usize) -> PupilSeries {
        PupilSeries {
            t: self.t[start..start + len].to_vec(),
            diameter: self.diameter[start..start + len].to_vec(),
            source: self.source,
            rate: self.rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PupilPolicy {
    pub source: PupilSource,
    /// Gaps up to this many seconds are bridged linearly; longer ones split.
    pub max_gap: f64,
    /// Nominal resampling rate in Hz.
    pub rate: f64,
}

impl Default for PupilPolicy {
    fn default() -> Self {
        PupilPolicy {
            source: PupilSource::Mean,
            max_gap: 0.5,
            rate: crate::model::DEFAULT_SAMPLE_RATE,
        }
    }
}

/// Cleans raw pupil readings into one or more uniformly sampled series.
pub fn preprocess_pupil(samples: &[GazeSample], policy: &PupilPolicy) -> Result<Vec<PupilSeries>> {
    let picked: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|s| {
            let v = match policy.source {
                PupilSource::Left => s.pupil_left,
                PupilSource::Right => s.pupil_right,
                PupilSource::Mean => s.pupil(),
            };
            v.map(|v| (s.t, v))
        })
        .collect();
    if picked.len() < 2 {
        return Err(Error::Empty("valid pupil samples"));
    }
    let mut pieces: Vec<Vec<(f64, f64)>> = alloc::vec![Vec::new()];
    for &(t, v) in &picked {
        let current = pieces.last_mut().expect("non-empty");
        if let Some(&(pt, _)) = current.last() {
            if t - pt > policy.max_gap + 1e-9 {
                pieces.push(alloc::vec![(t, v)]);
                continue;
            }
        }
        current.push((t, v));
    }
    let out: Vec<PupilSeries> = pieces
        .into_iter()
        .filter(|p| p.len() >= 2)
        .map(|p| resample(&p, policy))
        .collect();
    if out.is_empty() {
        return Err(Error::Empty("pupil segment with two or more samples"));
    }
    Ok(out)
}

fn resample(points: &[(f64, f64)], policy: &PupilPolicy) -> PupilSeries {
    let (t0, t1) = (points[0].0, points[points.len() - 1].0);
    let n = libm::floor((t1 - t0) * policy.rate + 1e-6) as usize + 1;
    let mut t = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let tk = t0 + k as f64 / policy.rate;
        while j + 2 < points.len() && points[j + 1].0 < tk {
            j += 1;
        }
        let (a, b) = (points[j], points[(j + 1).min(points.len() - 1)]);
        let v = if b.0 > a.0 {
            let s = ((tk - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
            a.1 + (b.1 - a.1) * s
        } else {
            a.1
        };
        t.push(tk);
        d.push(v);
    }
    PupilSeries { t, diameter: d, source: policy.source, rate: policy.rate }
}

fn check_len(series: &PupilSeries) -> Result<()> {
    if series.len() < MIN_IPA_SAMPLES {
        return Err(Error::TooShort {
            needed: format!("{MIN_IPA_SAMPLES} pupil samples"),
            got: format!("{}", series.len()),
        });
    }
    Ok(())
}

/// Level-2 MODWT detail coefficients, same length as the input.
pub fn wavelet_detail(series: &PupilSeries) -> Result<Vec<f64>> {
    check_len(series)?;
    Ok(modwt(&series.diameter, DETAIL_LEVEL).details.pop().expect("two levels"))
}

/// Modulus maxima above the universal threshold, per second.
///
/// The line through the first and last sample is removed before the
/// transform, so the periodic extension has no jump at the wrap.
pub fn compute_ipa(series: &PupilSeries) -> Result<f64> {
    check_len(series)?;
    let x = &series.diameter;
    let n = x.len();
    let peak = x.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let (first, last) = (x[0], x[n - 1]);
    let detrended: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| v - (first + (last - first) * i as f64 / (n - 1) as f64))
        .collect();
    let detail = modwt(&detrended, DETAIL_LEVEL).details.pop().expect("two levels");
    let modulus: Vec<f64> = detail.iter().map(|d| libm::fabs(*d)).collect();
    let sigma = median(&modulus) / 0.6745;
    let threshold = sigma * libm::sqrt(2.0 * libm::log(n as f64));
    let floor = RELATIVE_FLOOR * peak;
    let count = (1..n - 1)
        .filter(|&i| {
            let m = modulus[i];
            m > modulus[i - 1] && m > modulus[i + 1] && m > threshold && m > floor
        })
        .count();
    Ok(count as f64 / series.duration())
}

/// IPA over sliding sub-windows, as `(window center time, ipa)` pairs.
pub fn ipa_series(series: &PupilSeries, subwindow: f64, hop: f64) -> Result<Vec<(f64, f64)>> {
    let win = libm::round(subwindow * series.rate) as usize;
    let step = (libm::round(hop * series.rate) as usize).max(1);
    if win == 0 || series.len() < win {
        return Err(Error::TooShort {
            needed: format!("{subwindow} s of pupil data"),
            got: format!("{} s", series.duration()),
        });
    }
    if win < MIN_IPA_SAMPLES {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + win <= series.len() {
        let w = series.slice(start, win);
        let center = 0.5 * (w.t[0] + w.t[win - 1]);
        out.push((center, compute_ipa(&w)?));
        start += step;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::wavelet::{sym16_highpass, SYM16_LOWPASS};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(values: Vec<f64>) -> PupilSeries {
        PupilSeries::uniform(0.0, 60.0, values)
    }

    fn gaze(t: f64, pupil: Option<f64>) -> GazeSample {
        GazeSample {
            t,
            gaze_origin: Vec3::ZERO,
            gaze_dir: Vec3::new(0.0, 0.0, 1.0),
            pupil_left: pupil,
            pupil_right: pupil,
            valid: pupil.is_some(),
        }
    }

    /// Level-2 equivalent filter built by direct convolution of the
    /// rescaled low-pass with the upsampled rescaled high-pass.
    fn level2_filter() -> Vec<f64> {
        let g: Vec<f64> = SYM16_LOWPASS.iter().map(|c| c / core::f64::consts::SQRT_2).collect();
        let h: Vec<f64> = sym16_highpass().iter().map(|c| c / core::f64::consts::SQRT_2).collect();
        let mut up = vec![0.0; 2 * (h.len() - 1) + 1];
        for (l, c) in h.iter().enumerate() {
            up[2 * l] = *c;
        }
        let mut out = vec![0.0; g.len() + up.len() - 1];
        for (i, a) in g.iter().enumerate() {
            for (j, b) in up.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    }

    fn circular_oracle(x: &[f64]) -> Vec<f64> {
        let f = level2_filter();
        let n = x.len();
        (0..n)
            .map(|t| {
                f.iter()
                    .enumerate()
                    .map(|(l, c)| c * x[(t + n * f.len() - l) % n])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn preprocess_constant_and_blink() {
        let s: Vec<GazeSample> = (0..120).map(|k| gaze(k as f64 / 60.0, Some(3.0))).collect();
        let p = preprocess_pupil(&s, &PupilPolicy::default()).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].len(), 120);
        assert!(p[0].diameter.iter().all(|&d| (d - 3.0).abs() < 1e-12));

        // 100 ms blink inside a ramp is bridged linearly
        let ramp = |t: f64| 3.0 + 0.5 * t;
        let s: Vec<GazeSample> = (0..120)
            .map(|k| {
                let t = k as f64 / 60.0;
                gaze(t, if (60..66).contains(&k) { None } else { Some(ramp(t)) })
            })
            .collect();
        let p = preprocess_pupil(&s, &PupilPolicy::default()).unwrap();
        assert_eq!(p.len(), 1);
        for (t, d) in p[0].t.iter().zip(&p[0].diameter) {
            assert!((d - ramp(*t)).abs() < 1e-9);
        }

        // 1 s gap splits
        let s: Vec<GazeSample> = (0..240)
            .map(|k| gaze(k as f64 / 60.0, if (60..120).contains(&k) { None } else { Some(3.0) }))
            .collect();
        assert_eq!(preprocess_pupil(&s, &PupilPolicy::default()).unwrap().len(), 2);

        let none: Vec<GazeSample> = (0..10).map(|k| gaze(k as f64, None)).collect();
        assert!(preprocess_pupil(&none, &PupilPolicy::default()).is_err());
    }

    #[test]
    fn detail_annihilates_constant_and_ramp() {
        let c = series(vec![3.2; 128]);
        assert!(wavelet_detail(&c).unwrap().iter().all(|d| d.abs() < 1e-9));
        let r = series((0..256).map(|i| 2.0 + 0.01 * i as f64).collect());
        let d = wavelet_detail(&r).unwrap();
        // away from the periodic wrap the ramp is annihilated
        let support = level2_filter().len();
        assert!(d[support..].iter().all(|v| v.abs() < 1e-9));
        assert!(wavelet_detail(&series(vec![1.0; 40])).is_err());
    }

    #[test]
    fn detail_matches_convolution_oracle() {
        let mut impulse = vec![0.0; 128];
        impulse[0] = 1.0;
        let d = wavelet_detail(&series(impulse)).unwrap();
        let f = level2_filter();
        for (t, v) in d.iter().enumerate() {
            let expected = if t < f.len() { f[t] } else { 0.0 };
            assert!((v - expected).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [64usize, 100, 257] {
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let got = wavelet_detail(&series(x.clone())).unwrap();
            for (a, b) in got.iter().zip(circular_oracle(&x)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ipa_of_constant_is_zero() {
        assert_eq!(compute_ipa(&series(vec![4.0; 120])).unwrap(), 0.0);
        let r = series((0..120).map(|i| 3.0 + 0.004 * i as f64).collect());
        assert_eq!(compute_ipa(&r).unwrap(), 0.0);
    }

    fn smooth_and_spiky(seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phase = rng.random::<f64>() * core::f64::consts::TAU;
        let amp = 0.2 + 0.3 * rng.random::<f64>();
        let smooth: Vec<f64> = (0..600)
            .map(|i| 3.5 + amp * libm::sin(2.0 * core::f64::consts::PI * 0.2 * i as f64 / 60.0 + phase))
            .collect();
        let mut spiky = smooth.clone();
        for _ in 0..10 {
            let at = 20 + (rng.random::<f64>() * 560.0) as usize;
            let h = 0.2 + 0.2 * rng.random::<f64>();
            spiky[at] += h;
            spiky[at + 1] += 0.5 * h;
        }
        (smooth, spiky)
    }

    #[test]
    fn transients_raise_ipa() {
        let (s, p) = smooth_and_spiky(1);
        let a = compute_ipa(&series(s)).unwrap();
        let b = compute_ipa(&series(p)).unwrap();
        assert!(b > a, "{a} vs {b}");
    }

    #[test]
    fn ipa_is_scale_and_offset_invariant() {
        let (_, p) = smooth_and_spiky(5);
        let base = compute_ipa(&series(p.clone())).unwrap();
        let scaled = compute_ipa(&series(p.iter().map(|v| v * 10.0).collect())).unwrap();
        let shifted = compute_ipa(&series(p.iter().map(|v| v + 2.0).collect())).unwrap();
        assert_eq!(base, scaled);
        assert_eq!(base, shifted);
        // bounded by one maximum every other sample
        assert!((0.0..=300.0 / 10.0).contains(&base));
    }

    #[test]
    fn ipa_series_counts_and_localizes() {
        let s = series(vec![3.0; 600]);
        let v = ipa_series(&s, 2.0, 0.5).unwrap();
        assert_eq!(v.len(), 17);
        assert!(v.iter().all(|&(_, x)| x == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x: Vec<f64> = (0..600).map(|_| 3.0 + 0.01 * rng.random::<f64>()).collect();
        for k in 0..8 {
            x[290 + 3 * k] += 0.4 * if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        let v = ipa_series(&series(x), 2.0, 0.5).unwrap();
        let best = v
            .iter()
            .cloned()
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert!((best.0 - 5.0).abs() <= 1.0, "peak window centered at {}", best.0);

        assert!(ipa_series(&series(vec![3.0; 60]), 2.0, 0.5).is_err());
    }
}
