use alloc::format;
use alloc::vec::Vec;

use super::hdbscan::{Clustering, DistanceMatrix};
use crate::error::{Error, Result};

/// Index of the member with the smallest total distance to the others;
/// ties go to the lower index.
pub fn medoid(dm: &DistanceMatrix, members: &[usize]) -> Option<usize> {
    members
        .iter()
        .map(|&i| (i, members.iter().map(|&j| dm.get(i, j)).sum::<f64>()))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|p| p.0)
}

/// Picks `k` representative pose indices: cluster medoids in descending
/// stability order, then farthest-point fill over the remaining poses.
pub fn select_poses(dm: &DistanceMatrix, clustering: &Clustering, k: usize) -> Result<Vec<usize>> {
    if dm.n < k {
        return Err(Error::TooShort { needed: format!("{k} poses"), got: format!("{}", dm.n) });
    }
    if clustering.labels.len() != dm.n {
        return Err(Error::Invalid("clustering does not match the pose set".into()));
    }
    let mut order: Vec<usize> = (0..clustering.n_clusters()).collect();
    order.sort_by(|a, b| clustering.stabilities[*b].total_cmp(&clustering.stabilities[*a]).then(a.cmp(b)));
    let mut chosen: Vec<usize> = order
        .into_iter()
        .filter_map(|c| medoid(dm, &clustering.members(c)))
        .take(k)
        .collect();
    if chosen.is_empty() && k > 0 {
        let all: Vec<usize> = (0..dm.n).collect();
        chosen.push(medoid(dm, &all).expect("non-empty pose set"));
    }
    while chosen.len() < k {
        let next = (0..dm.n)
            .filter(|i| !chosen.contains(i))
            .map(|i| (i, chosen.iter().map(|&c| dm.get(i, c)).fold(f64::INFINITY, f64::min)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("enough poses remain")
            .0;
        chosen.push(next);
    }
    Ok(chosen)
}
