//! HDBSCAN over an arbitrary precomputed distance matrix, with
//! excess-of-mass cluster selection.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::geometry::{skeletal_distance, Pose};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    /// Neighbor count for core distances, counting the point itself.
    pub min_samples: usize,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        HdbscanParams { min_cluster_size: 5, min_samples: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Clustering {
    /// Cluster index per point, `-1` for noise. Clusters are numbered by
    /// their smallest member index.
    pub labels: Vec<i32>,
    /// Excess-of-mass stability per cluster index.
    pub stabilities: Vec<f64>,
}

impl Clustering {
    pub fn n_clusters(&self) -> usize {
        self.stabilities.len()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|i| self.labels[*i] == cluster as i32).collect()
    }
}

/// Row-major symmetric distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub n: usize,
    pub d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = f(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        DistanceMatrix { n, d }
    }

    pub fn poses(poses: &[Pose]) -> Result<Self> {
        if let Some(first) = poses.first() {
            if let Some(p) = poses.iter().find(|p| p.joints.len() != first.joints.len()) {
                return Err(Error::Invalid(format!(
                    "joint counts differ ({} vs {})",
                    first.joints.len(),
                    p.joints.len()
                )));
            }
        }
        Ok(Self::from_fn(poses.len(), |i, j| skeletal_distance(&poses[i], &poses[j]).expect("joint counts checked")))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Distance to the `k`-th nearest point, the point itself being the first.
pub fn core_distances(dm: &DistanceMatrix, k: usize) -> Vec<f64> {
    (0..dm.n)
        .map(|i| {
            let mut row: Vec<f64> = dm.d[i * dm.n..(i + 1) * dm.n].to_vec();
            row.sort_by(f64::total_cmp);
            row[(k.max(1) - 1).min(dm.n - 1)]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Minimum spanning tree of the mutual-reachability graph (Kruskal, ties
/// broken by endpoint indices). Edges come back sorted by weight.
pub fn mutual_reachability_mst(dm: &DistanceMatrix, min_samples: usize) -> Vec<Edge> {
    let core = core_distances(dm, min_samples);
    let n = dm.n;
    let mut edges = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for a in 0..n {
        for b in a + 1..n {
            edges.push(Edge { a, b, w: dm.get(a, b).max(core[a]).max(core[b]) });
        }
    }
    edges.sort_by(|x, y| x.w.total_cmp(&y.w).then(x.a.cmp(&y.a)).then(x.b.cmp(&y.b)));
    let mut uf = UnionFind::new(n);
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    for e in edges {
        let (ra, rb) = (uf.find(e.a), uf.find(e.b));
        if ra != rb {
            uf.parent[ra.max(rb)] = ra.min(rb);
            tree.push(e);
            if tree.len() + 1 == n {
                break;
            }
        }
    }
    tree
}

struct Node {
    left: usize,
    right: usize,
    dist: f64,
    size: usize,
}

/// Dendrogram from sorted MST edges; internal node `n + k` is the k-th merge.
fn single_linkage(n: usize, mst: &[Edge]) -> Vec<Node> {
    let mut uf = UnionFind::new(2 * n);
    let mut size = vec![1usize; 2 * n];
    let mut nodes = Vec::with_capacity(n.saturating_sub(1));
    for (k, e) in mst.iter().enumerate() {
        let (ra, rb) = (uf.find(e.a), uf.find(e.b));
        let id = n + k;
        uf.parent[ra] = id;
        uf.parent[rb] = id;
        size[id] = size[ra] + size[rb];
        nodes.push(Node { left: ra, right: rb, dist: e.w, size: size[id] });
    }
    nodes
}

fn lambda(d: f64) -> f64 {
    1.0 / d.max(1e-12)
}

pub fn hdbscan(dm: &DistanceMatrix, params: &HdbscanParams) -> Result<Clustering> {
    let n = dm.n;
    if params.min_cluster_size < 2 || params.min_samples < 1 {
        return Err(Error::Invalid("min_cluster_size must be >= 2 and min_samples >= 1".into()));
    }
    if n < params.min_cluster_size {
        return Err(Error::TooShort {
            needed: format!("{} poses", params.min_cluster_size),
            got: format!("{n}"),
        });
    }
    if dm.d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("distance matrix"));
    }
    let mst = mutual_reachability_mst(dm, params.min_samples);
    let tree = single_linkage(n, &mst);
    let size_of = |id: usize| if id < n { 1 } else { tree[id - n].size };
    let mcs = params.min_cluster_size;

    // condensed tree: clusters with birth lambda and parent; each point
    // records the cluster it falls out of
    let mut birth: Vec<f64> = vec![0.0];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut stability: Vec<f64> = vec![0.0];
    let mut point_cluster = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];

    fn leaves(tree: &[Node], n: usize, id: usize, out: &mut Vec<usize>) {
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                stack.push(tree[x - n].left);
                stack.push(tree[x - n].right);
            }
        }
    }

    let root = 2 * n - 2;
    let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
    while let Some((id, cl)) = stack.pop() {
        if id < n {
            point_cluster[id] = cl;
            continue;
        }
        let node = &tree[id - n];
        let lam = lambda(node.dist);
        let (l, r) = (node.left, node.right);
        let (big_l, big_r) = (size_of(l) >= mcs, size_of(r) >= mcs);
        match (big_l, big_r) {
            (true, true) => {
                for child in [l, r] {
                    let c = birth.len();
                    birth.push(lam);
                    parent.push(Some(cl));
                    stability.push(0.0);
                    children.push(Vec::new());
                    children[cl].push(c);
                    stability[cl] += (lam - birth[cl]) * size_of(child) as f64;
                    stack.push((child, c));
                }
            }
            _ => {
                for (child, big) in [(l, big_l), (r, big_r)] {
                    if big {
                        stack.push((child, cl));
                    } else {
                        let mut pts = Vec::new();
                        leaves(&tree, n, child, &mut pts);
                        for p in pts {
                            point_cluster[p] = cl;
                            stability[cl] += lam - birth[cl];
                        }
                    }
                }
            }
        }
    }
    // excess of mass, children before parents; the root is never selected
    let k = birth.len();
    let mut selected = vec![false; k];
    let mut best = stability.clone();
    for c in (1..k).rev() {
        let child_sum: f64 = children[c].iter().map(|ch| best[*ch]).sum();
        if children[c].is_empty() || stability[c] >= child_sum {
            selected[c] = true;
            let mut st = children[c].clone();
            while let Some(x) = st.pop() {
                selected[x] = false;
                st.extend(children[x].iter().copied());
            }
        } else {
            best[c] = child_sum;
        }
    }

    let mut chosen: Vec<usize> = (1..k).filter(|c| selected[*c]).collect();
    let selected_ancestor = |mut c: usize| -> Option<usize> {
        loop {
            if selected[c] {
                return Some(c);
            }
            c = parent[c]?;
        }
    };
    let raw: Vec<Option<usize>> = (0..n).map(|p| selected_ancestor(point_cluster[p])).collect();
    chosen.sort_by_key(|c| raw.iter().position(|r| *r == Some(*c)).unwrap_or(usize::MAX));
    chosen.retain(|c| raw.contains(&Some(*c)));
    let labels = raw
        .iter()
        .map(|r| match r {
            Some(c) => chosen.iter().position(|x| x == c).expect("chosen cluster") as i32,
            None => -1,
        })
        .collect();
    Ok(Clustering { labels, stabilities: chosen.iter().map(|c| stability[*c]).collect() })
}

pub fn cluster_poses(poses: &[Pose], params: &HdbscanParams) -> Result<Clustering> {
    hdbscan(&DistanceMatrix::poses(poses)?, params)
}
