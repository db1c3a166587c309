use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::smo::{default_gamma, gram, rbf, solve, Problem};
use super::standardize::{check_matrix, Standardizer};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, FeatureVector};

/// How continuous noticeability maps to discrete classes. Upper bounds are
/// inclusive: a value equal to a threshold belongs to the lower class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Scheme {
    /// Unnoticeable (≤ 0.5) / Noticeable.
    Binary,
    /// Low (≤ 0.4) / Medium (≤ 0.7) / High.
    Three,
}

impl Scheme {
    pub fn thresholds(self) -> &'static [f64] {
        match self {
            Scheme::Binary => &[0.5],
            Scheme::Three => &[0.4, 0.7],
        }
    }

    pub fn n_classes(self) -> usize {
        self.thresholds().len() + 1
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Scheme::Binary => &["Unnoticeable", "Noticeable"],
            Scheme::Three => &["Low", "Medium", "High"],
        }
    }

    pub fn class_of(self, noticeability: f64) -> usize {
        self.thresholds().iter().take_while(|t| noticeability > **t).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SvcParams {
    pub c: f64,
    pub gamma: Option<f64>,
    pub tol: f64,
}

impl Default for SvcParams {
    fn default() -> Self {
        SvcParams { c: 1.0, gamma: None, tol: 1e-3 }
    }
}

/// Binary machine separating class `pos` (positive side) from `neg`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairMachine {
    pub pos: usize,
    pub neg: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `y_i α_i` per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
}

impl PairMachine {
    pub fn decision(&self, z: &[f64], gamma: f64) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * rbf(sv, z, gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// One-vs-one soft-margin RBF SVM.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifierModel {
    pub feature_set: FeatureSet,
    pub scheme: Scheme,
    pub standardizer: Standardizer,
    pub gamma: f64,
    pub c: f64,
    /// Machines for every pair of classes seen in training, lower class positive.
    pub machines: Vec<PairMachine>,
}

pub fn classify_train(
    rows: &[Vec<f64>],
    noticeability: &[f64],
    feature_set: FeatureSet,
    scheme: Scheme,
    params: &SvcParams,
) -> Result<ClassifierModel> {
    let classes: Vec<usize> = noticeability.iter().map(|p| scheme.class_of(*p)).collect();
    classify_train_labels(rows, &classes, feature_set, scheme, params)
}

/// Trains on already-discretized class labels.
pub fn classify_train_labels(
    rows: &[Vec<f64>],
    classes: &[usize],
    feature_set: FeatureSet,
    scheme: Scheme,
    params: &SvcParams,
) -> Result<ClassifierModel> {
    let d = check_matrix(rows)?;
    if d != feature_set.len() {
        return Err(Error::FeatureMismatch { expected: feature_set.len(), got: d });
    }
    if classes.len() != rows.len() {
        return Err(Error::Invalid(format!("{} rows but {} labels", rows.len(), classes.len())));
    }
    let k = scheme.n_classes();
    if let Some(bad) = classes.iter().find(|c| **c >= k) {
        return Err(Error::Invalid(format!("class {bad} outside a {k}-class scheme")));
    }
    let present: Vec<usize> = (0..k).filter(|c| classes.contains(c)).collect();
    if present.len() < 2 {
        return Err(Error::SingleClass(classes[0]));
    }
    if !(params.c > 0.0 && params.tol > 0.0) {
        return Err(Error::Invalid("SVC needs C > 0 and tol > 0".into()));
    }
    let standardizer = Standardizer::fit(rows)?;
    let z = standardizer.transform(rows)?;
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(&z));
    let kfull = gram(&z, gamma);
    let l = z.len();

    let mut machines = Vec::new();
    for (ai, &pos) in present.iter().enumerate() {
        for &neg in &present[ai + 1..] {
            let idx: Vec<usize> = (0..l).filter(|i| classes[*i] == pos || classes[*i] == neg).collect();
            let n = idx.len();
            let mut kk = vec![0.0; n * n];
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    kk[a * n + b] = kfull[i * l + j];
                }
            }
            let y: Vec<f64> = idx.iter().map(|i| if classes[*i] == pos { 1.0 } else { -1.0 }).collect();
            let sol = solve(&Problem { k: &kk, p: vec![-1.0; n], y: y.clone(), c: params.c, tol: params.tol });
            let mut m = PairMachine { pos, neg, support_vectors: Vec::new(), coef: Vec::new(), bias: -sol.rho };
            for (a, &i) in idx.iter().enumerate() {
                if sol.alpha[a] > 0.0 {
                    m.support_vectors.push(z[i].clone());
                    m.coef.push(y[a] * sol.alpha[a]);
                }
            }
            machines.push(m);
        }
    }
    Ok(ClassifierModel { feature_set, scheme, standardizer, gamma, c: params.c, machines })
}

impl ClassifierModel {
    /// Vote count per class for one row.
    pub fn votes(&self, row: &[f64]) -> Result<Vec<usize>> {
        if row.len() != self.feature_set.len() {
            return Err(Error::FeatureMismatch { expected: self.feature_set.len(), got: row.len() });
        }
        let z = self.standardizer.transform_row(row)?;
        let mut votes = vec![0; self.scheme.n_classes()];
        for m in &self.machines {
            if m.decision(&z, self.gamma) >= 0.0 {
                votes[m.pos] += 1;
            } else {
                votes[m.neg] += 1;
            }
        }
        Ok(votes)
    }

    /// Majority vote; ties go to the lower class.
    pub fn predict_row(&self, row: &[f64]) -> Result<usize> {
        let votes = self.votes(row)?;
        let best = *votes.iter().max().expect("at least two classes");
        Ok(votes.iter().position(|v| *v == best).expect("max is present"))
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<usize> {
        self.predict_row(&self.feature_set.select(features))
    }
}

pub fn classify_predict(model: &ClassifierModel, row: &[f64]) -> Result<usize> {
    model.predict_row(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inclusive_thresholds() {
        assert_eq!(Scheme::Three.class_of(0.4), 0);
        assert_eq!(Scheme::Three.class_of(0.4000001), 1);
        assert_eq!(Scheme::Three.class_of(0.7), 1);
        assert_eq!(Scheme::Three.class_of(0.7000001), 2);
        assert_eq!(Scheme::Binary.class_of(0.5), 0);
        assert_eq!(Scheme::Binary.class_of(0.5000001), 1);
        assert_eq!(Scheme::Binary.class_of(0.0), 0);
        assert_eq!(Scheme::Three.class_of(1.0), 2);
    }

    fn blobs(centers: &[[f64; 2]], per: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut cls = Vec::new();
        for (c, ctr) in centers.iter().enumerate() {
            for _ in 0..per {
                rows.push(vec![ctr[0] + rng.random::<f64>() - 0.5, ctr[1] + rng.random::<f64>() - 0.5]);
                cls.push(c);
            }
        }
        (rows, cls)
    }

    fn set2() -> FeatureSet {
        FeatureSet::from_indices(&[0, 1]).unwrap()
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let (rows, cls) = blobs(&[[0.0, 0.0], [6.0, 6.0]], 15, 1);
        let m = classify_train_labels(&rows, &cls, set2(), Scheme::Binary, &SvcParams::default()).unwrap();
        for (r, c) in rows.iter().zip(&cls) {
            assert_eq!(m.predict_row(r).unwrap(), *c);
        }
        let centers = [[0.0, 0.0], [6.0, 0.0], [3.0, 6.0]];
        let (rows, cls) = blobs(&centers, 12, 2);
        let m = classify_train_labels(&rows, &cls, set2(), Scheme::Three, &SvcParams::default()).unwrap();
        assert_eq!(m.machines.len(), 3);
        for (c, ctr) in centers.iter().enumerate() {
            assert_eq!(m.predict_row(ctr).unwrap(), c);
        }
    }

    #[test]
    fn vote_matches_pairwise_oracle() {
        let (rows, cls) = blobs(&[[0.0, 0.0], [2.0, 0.0], [1.0, 2.0]], 10, 3);
        let m = classify_train_labels(&rows, &cls, set2(), Scheme::Three, &SvcParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = vec![rng.random::<f64>() * 3.0 - 0.5, rng.random::<f64>() * 3.0 - 0.5];
            let z = m.standardizer.transform_row(&x).unwrap();
            let mut votes = [0usize; 3];
            for a in 0..3 {
                for b in a + 1..3 {
                    let mach = m.machines.iter().find(|mm| mm.pos == a && mm.neg == b).unwrap();
                    let mut f = mach.bias;
                    for (sv, c) in mach.support_vectors.iter().zip(&mach.coef) {
                        let d2: f64 = sv.iter().zip(&z).map(|(p, q)| (p - q) * (p - q)).sum();
                        f += c * (-m.gamma * d2).exp();
                    }
                    votes[if f >= 0.0 { a } else { b }] += 1;
                }
            }
            let mut best = 0;
            for c in 1..3 {
                if votes[c] > votes[best] {
                    best = c;
                }
            }
            assert_eq!(m.predict_row(&x).unwrap(), best);
        }
    }

    #[test]
    fn tie_goes_to_lower_class() {
        // three machines each voting for a different class: 1-1-1 tie
        let m = ClassifierModel {
            feature_set: FeatureSet::from_indices(&[0]).unwrap(),
            scheme: Scheme::Three,
            standardizer: Standardizer { mean: vec![0.0], std: vec![1.0] },
            gamma: 1.0,
            c: 1.0,
            machines: vec![
                PairMachine { pos: 0, neg: 1, support_vectors: vec![], coef: vec![], bias: 1.0 },
                PairMachine { pos: 0, neg: 2, support_vectors: vec![], coef: vec![], bias: -1.0 },
                PairMachine { pos: 1, neg: 2, support_vectors: vec![], coef: vec![], bias: 1.0 },
            ],
        };
        assert_eq!(m.votes(&[0.0]).unwrap(), vec![1, 1, 1]);
        assert_eq!(m.predict_row(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn single_class_is_error() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        let r = classify_train(&rows, &[0.1, 0.2, 0.3], FeatureSet::from_indices(&[0]).unwrap(), Scheme::Three, &SvcParams::default());
        assert_eq!(r.unwrap_err(), Error::SingleClass(0));
    }
}
