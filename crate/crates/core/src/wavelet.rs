//! Maximal-overlap (undecimated) discrete wavelet transform with the
//! 32-tap Symlet-16 filter pair and periodic boundaries.

use alloc::vec;
use alloc::vec::Vec;

/// Symlet-16 scaling (low-pass) decomposition filter.
pub const SYM16_LOWPASS: [f64; 32] = [
    6.230006701220761e-06,
    -3.113556407621969e-06,
    -0.00010943147929529757,
    2.8078582128442894e-05,
    0.0008523547108047095,
    -0.0001084456223089688,
    -0.0038809122526038786,
    0.0007182119788317892,
    0.012666731659857348,
    -0.0031265171722710075,
    -0.031051202843553064,
    0.004869274404904607,
    0.032333091610663785,
    -0.06698304907021778,
    -0.034574228416972504,
    0.39712293362064416,
    0.7565249878756971,
    0.47534280601152273,
    -0.054040601387606135,
    -0.15959219218520598,
    0.03072113906330156,
    0.07803785290341991,
    -0.003510275068374009,
    -0.024952758046290123,
    0.001359844742484172,
    0.0069377611308027096,
    -0.00022211647621176323,
    -0.0013387206066921965,
    3.656592483348223e-05,
    0.00016545679579108483,
    -5.396483179315242e-06,
    -1.0797982104319795e-05,
];

/// Quadrature-mirror wavelet (high-pass) filter: `h[l] = (-1)^l g[L-1-l]`.
pub fn sym16_highpass() -> [f64; 32] {
    let mut h = [0.0; 32];
    for (l, v) in h.iter_mut().enumerate() {
        let g = SYM16_LOWPASS[31 - l];
        *v = if l % 2 == 0 { g } else { -g };
    }
    h
}

/// Output of a multi-level MODWT.
#[derive(Debug, Clone)]
pub struct Modwt {
    /// `details[j - 1]` holds the level-`j` wavelet coefficients.
    pub details: Vec<Vec<f64>>,
    /// Scaling coefficients at the deepest level.
    pub smooth: Vec<f64>,
}

/// Pyramid MODWT: at level `j` the rescaled filters (`/√2`) are applied
/// with stride `2^(j-1)` over the periodically extended previous smooth.
pub fn modwt(signal: &[f64], levels: usize) -> Modwt {
    let n = signal.len();
    let inv_sqrt2 = core::f64::consts::FRAC_1_SQRT_2;
    let hi: Vec<f64> = sym16_highpass().iter().map(|c| c * inv_sqrt2).collect();
    let lo: Vec<f64> = SYM16_LOWPASS.iter().map(|c| c * inv_sqrt2).collect();
    let mut smooth = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for j in 1..=levels {
        let stride = 1usize << (j - 1);
        let mut w = vec![0.0; n];
        let mut v = vec![0.0; n];
        for t in 0..n {
            let (mut ws, mut vs) = (0.0, 0.0);
            for l in 0..hi.len() {
                let idx = (t as isize - (stride * l) as isize).rem_euclid(n as isize) as usize;
                ws += hi[l] * smooth[idx];
                vs += lo[l] * smooth[idx];
            }
            w[t] = ws;
            v[t] = vs;
        }
        details.push(w);
        smooth = v;
    }
    Modwt { details, smooth }
}
