//! Two-stage wrapper feature selection scored by LOUO mean MSE.

use alloc::vec::Vec;
use core::cmp::Ordering;

use super::cv::louo_svr;
use super::svr::SvrParams;
use crate::error::Result;
use crate::features::{Category, FeatureSet};
use crate::model::NoticeabilitySample;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scored {
    pub set: FeatureSet,
    pub mse: f64,
}

/// Lower MSE first; exact ties prefer fewer features, then the
/// lexicographically smaller index list.
pub fn rank_order(a: &Scored, b: &Scored) -> Ordering {
    a.mse
        .total_cmp(&b.mse)
        .then(a.set.len().cmp(&b.set.len()))
        .then_with(|| a.set.indices().cmp(&b.set.indices()))
}

/// Scores every candidate and returns them best-first.
pub fn rank<F>(candidates: &[FeatureSet], mut score: F) -> Result<Vec<Scored>>
where
    F: FnMut(FeatureSet) -> Result<f64>,
{
    let mut out = Vec::with_capacity(candidates.len());
    for &set in candidates {
        out.push(Scored { set, mse: score(set)? });
    }
    out.sort_by(rank_order);
    Ok(out)
}

/// Every non-empty subset of a category's features.
pub fn category_subsets(category: Category) -> Vec<FeatureSet> {
    let idx: Vec<usize> = category.range().collect();
    (1u32..(1 << idx.len()))
        .map(|bits| {
            let pick: Vec<usize> = idx.iter().enumerate().filter(|(b, _)| bits & (1 << b) != 0).map(|(_, i)| *i).collect();
            FeatureSet::from_indices(&pick).expect("non-empty subset")
        })
        .collect()
}

/// All 15 non-empty unions of the four per-category winners, paired with
/// the categories they combine.
pub fn category_unions(bests: &[(Category, FeatureSet)]) -> Vec<(Vec<Category>, FeatureSet)> {
    let k = bests.len();
    (1u32..(1 << k))
        .map(|bits| {
            let chosen: Vec<&(Category, FeatureSet)> =
                bests.iter().enumerate().filter(|(b, _)| bits & (1 << b) != 0).map(|(_, c)| c).collect();
            let set = chosen.iter().skip(1).fold(chosen[0].1, |acc, c| acc.union(c.1));
            (chosen.iter().map(|c| c.0).collect(), set)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CategoryChoice {
    pub category: Category,
    pub best: Scored,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Selection {
    pub per_category: Vec<CategoryChoice>,
    /// All category unions, best first.
    pub ranking: Vec<Scored>,
    pub best: Scored,
}

pub fn select_within_category(
    samples: &[NoticeabilitySample],
    category: Category,
    params: &SvrParams,
) -> Result<CategoryChoice> {
    let subsets = category_subsets(category);
    let ranked = rank(&subsets, |s| Ok(louo_svr(samples, s, params)?.mean[0]))?;
    Ok(CategoryChoice { category, best: ranked[0].clone(), evaluated: subsets.len() })
}

pub fn select_categories(
    samples: &[NoticeabilitySample],
    bests: &[(Category, FeatureSet)],
    params: &SvrParams,
) -> Result<Vec<Scored>> {
    let unions: Vec<FeatureSet> = category_unions(bests).into_iter().map(|u| u.1).collect();
    rank(&unions, |s| Ok(louo_svr(samples, s, params)?.mean[0]))
}

/// Both stages: per-category exhaustive search, then the 15 unions.
pub fn select_features(samples: &[NoticeabilitySample], params: &SvrParams) -> Result<Selection> {
    let per_category = Category::ALL
        .into_iter()
        .map(|c| select_within_category(samples, c, params))
        .collect::<Result<Vec<_>>>()?;
    let bests: Vec<(Category, FeatureSet)> = per_category.iter().map(|c| (c.category, c.best.set)).collect();
    let ranking = select_categories(samples, &bests, params)?;
    Ok(Selection { per_category, best: ranking[0].clone(), ranking })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureVector, FEATURE_COUNT};
    use crate::model::{Condition, StimulusKind};
    use alloc::format;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subset_counts() {
        assert_eq!(category_subsets(Category::Ipa).len(), 31);
        assert_eq!(category_subsets(Category::Distance).len(), 1023);
        assert_eq!(category_subsets(Category::Saccade).len(), 7);
        assert_eq!(category_subsets(Category::Fixation).len(), 7);
        let bests: Vec<(Category, FeatureSet)> = Category::ALL.into_iter().map(|c| (c, FeatureSet::category(c))).collect();
        let u = category_unions(&bests);
        assert_eq!(u.len(), 15);
        assert!(u.iter().any(|(_, s)| *s == FeatureSet::all()));
    }

    #[test]
    fn tie_break_prefers_small_then_lexicographic() {
        let a = Scored { set: FeatureSet::from_indices(&[15, 16]).unwrap(), mse: 0.1 };
        let b = Scored { set: FeatureSet::from_indices(&[17]).unwrap(), mse: 0.1 };
        let c = Scored { set: FeatureSet::from_indices(&[16]).unwrap(), mse: 0.1 };
        let mut v = vec![a.clone(), b.clone(), c.clone()];
        v.sort_by(rank_order);
        assert_eq!(v, vec![c, b, a]);
    }

    /// Saccade features: only `saccade.duration` carries the label.
    fn planted(seed: u64) -> Vec<NoticeabilitySample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Condition::collection_grid(StimulusKind::Opacity);
        let mut out = Vec::new();
        for u in 0..12 {
            for c in grid {
                let label: f64 = rng.random();
                let mut v = [0.0; FEATURE_COUNT];
                for x in v.iter_mut() {
                    *x = rng.random();
                }
                v[16] = label * 3.0;
                out.push(crate::model::NoticeabilitySample {
                    user_id: format!("u{u}"),
                    condition: c,
                    label,
                    n_trials: 24,
                    features: Some(FeatureVector { values: v, window: (0.0, 1.0) }),
                });
            }
        }
        out
    }

    #[test]
    fn planted_singleton_wins() {
        let s = planted(9);
        // fixed width so extra noise dimensions only add kernel distance
        let p = SvrParams { gamma: Some(0.5), ..SvrParams::default() };
        let choice = select_within_category(&s, Category::Saccade, &p).unwrap();
        assert_eq!(choice.evaluated, 7);
        assert_eq!(choice.best.set.indices(), vec![16]);
        let again = louo_svr(&s, choice.best.set, &p).unwrap().mean[0];
        assert_eq!(again, choice.best.mse);
        assert_eq!(select_within_category(&s, Category::Saccade, &p).unwrap(), choice);
    }
}
