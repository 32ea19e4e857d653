//! HDBSCAN over Euclidean points.
//!
//! Mutual-reachability distances, a Prim minimum spanning tree on the dense
//! graph, single-linkage merges, the condensed tree, and excess-of-mass
//! selection. O(n²) time and O(n) extra memory beyond the input.

use nalgebra::Vector3;

/// Flat clustering result.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterSet {
    /// Point indices per cluster, each sorted; clusters ordered by first member.
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

impl ClusterSet {
    /// Cluster id per point, `None` for noise.
    pub fn labels(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (c, members) in self.clusters.iter().enumerate() {
            for &i in members {
                out[i] = Some(c);
            }
        }
        out
    }
}

/// Smallest distance treated as non-zero when converting to density levels.
const MIN_DISTANCE: f64 = 1e-12;
/// Tukey far-out fence multiplier for trimming a whole-data cluster.
const ROOT_FENCE: f64 = 3.0;

/// Distance to the `k`-th nearest point, counting the point itself as the first.
fn core_distances(points: &[Vector3<f64>], k: usize) -> Vec<f64> {
    let n = points.len();
    let mut buf = vec![0.0; n];
    (0..n)
        .map(|i| {
            for (j, q) in points.iter().enumerate() {
                buf[j] = (points[i] - q).norm();
            }
            let kth = (k - 1).min(n - 1);
            *buf.select_nth_unstable_by(kth, f64::total_cmp).1
        })
        .collect()
}

/// Minimum spanning tree edges `(a, b, weight)` of the mutual-reachability graph.
fn mst(points: &[Vector3<f64>], core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = (points[cur] - points[j]).norm().max(core[cur]).max(core[j]);
            if d < best[j] {
                best[j] = d;
                from[j] = cur;
            }
            if best[j] < next_w || (best[j] == next_w && j < next) {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, next_w));
        cur = next;
    }
    edges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Single-linkage dendrogram: node `n + i` merges `children[i]` at `dist[i]`.
struct Dendrogram {
    children: Vec<(usize, usize)>,
    dist: Vec<f64>,
    size: Vec<usize>,
}

fn single_linkage(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Dendrogram {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut uf = UnionFind {
        parent: (0..2 * n).collect(),
    };
    let mut size = vec![1usize; n];
    let mut children = Vec::with_capacity(n - 1);
    let mut dist = Vec::with_capacity(n - 1);
    for (a, b, w) in edges {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let node = n + children.len();
        uf.parent[ra] = node;
        uf.parent[rb] = node;
        children.push((ra, rb));
        dist.push(w);
        size.push(size[ra] + size[rb]);
    }
    Dendrogram { children, dist, size }
}

/// Condensed-tree cluster: parent cluster, birth level, and the points that
/// fall out of it with their levels.
struct CondensedCluster {
    parent: Option<usize>,
    birth: f64,
    children: Vec<usize>,
    points: Vec<(usize, f64)>,
    stability: f64,
}

fn lambda(d: f64) -> f64 {
    1.0 / d.max(MIN_DISTANCE)
}

fn leaves(dg: &Dendrogram, n: usize, node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(v) = stack.pop() {
        if v < n {
            out.push(v);
        } else {
            let (a, b) = dg.children[v - n];
            stack.push(a);
            stack.push(b);
        }
    }
}

fn condense(dg: &Dendrogram, n: usize, min_size: usize) -> Vec<CondensedCluster> {
    let mut clusters = vec![CondensedCluster {
        parent: None,
        birth: 0.0,
        children: Vec::new(),
        points: Vec::new(),
        stability: 0.0,
    }];
    // (dendrogram node, condensed cluster it belongs to)
    let mut stack = vec![(2 * n - 2, 0usize)];
    let mut fallen = Vec::new();
    while let Some((node, c)) = stack.pop() {
        // only nodes of at least `min_size ≥ 2` points are ever pushed
        debug_assert!(node >= n);
        let (a, b) = dg.children[node - n];
        let l = lambda(dg.dist[node - n]);
        let (sa, sb) = (dg.size[a], dg.size[b]);
        match (sa >= min_size, sb >= min_size) {
            (true, true) => {
                for child in [a, b] {
                    let id = clusters.len();
                    clusters.push(CondensedCluster {
                        parent: Some(c),
                        birth: l,
                        children: Vec::new(),
                        points: Vec::new(),
                        stability: 0.0,
                    });
                    clusters[c].children.push(id);
                    stack.push((child, id));
                }
            }
            (false, false) => {
                fallen.clear();
                leaves(dg, n, a, &mut fallen);
                leaves(dg, n, b, &mut fallen);
                clusters[c].points.extend(fallen.iter().map(|&p| (p, l)));
            }
            (true, false) | (false, true) => {
                let (big, small) = if sa >= min_size { (a, b) } else { (b, a) };
                fallen.clear();
                leaves(dg, n, small, &mut fallen);
                clusters[c].points.extend(fallen.iter().map(|&p| (p, l)));
                stack.push((big, c));
            }
        }
    }
    // stability: Σ (λ_exit − λ_birth) over points and child clusters
    for c in 0..clusters.len() {
        let birth = clusters[c].birth;
        let mut s: f64 = clusters[c].points.iter().map(|&(_, l)| l - birth).sum();
        for &ch in &clusters[c].children {
            let size = subtree_size(&clusters, ch);
            s += (clusters[ch].birth - birth) * size as f64;
        }
        clusters[c].stability = s;
    }
    clusters
}

fn subtree_size(clusters: &[CondensedCluster], c: usize) -> usize {
    clusters[c].points.len() + clusters[c].children.iter().map(|&ch| subtree_size(clusters, ch)).sum::<usize>()
}

fn subtree_points(clusters: &[CondensedCluster], c: usize, out: &mut Vec<(usize, f64)>) {
    out.extend_from_slice(&clusters[c].points);
    for &ch in &clusters[c].children {
        subtree_points(clusters, ch, out);
    }
}

/// Excess-of-mass selection. Children always have larger ids than parents.
fn select(clusters: &[CondensedCluster]) -> Vec<usize> {
    let m = clusters.len();
    let mut selected = vec![false; m];
    let mut subtree = vec![0.0; m];
    for c in (0..m).rev() {
        let child_sum: f64 = clusters[c].children.iter().map(|&ch| subtree[ch]).sum();
        if clusters[c].children.is_empty() || clusters[c].stability >= child_sum {
            selected[c] = true;
            subtree[c] = clusters[c].stability;
            let mut stack = clusters[c].children.clone();
            while let Some(d) = stack.pop() {
                selected[d] = false;
                stack.extend_from_slice(&clusters[d].children);
            }
        } else {
            subtree[c] = child_sum;
        }
    }
    (0..m).filter(|&c| selected[c]).collect()
}

/// Linear-interpolated quantile of a sorted slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Clusters `points` with HDBSCAN.
///
/// Core distances use `min_cluster_size` neighbors (the point itself
/// included). Selection may pick the whole data set as one cluster; in that
/// case points whose exit distance lies beyond the far-out fence
/// (Q3 + 3·IQR) of all exit distances are reported as noise.
pub fn cluster(points: &[Vector3<f64>], min_cluster_size: usize) -> ClusterSet {
    let n = points.len();
    let min_size = min_cluster_size.max(2);
    if n < min_size {
        return ClusterSet {
            clusters: Vec::new(),
            noise: (0..n).collect(),
        };
    }
    let core = core_distances(points, min_size);
    let dg = single_linkage(n, mst(points, &core));
    let tree = condense(&dg, n, min_size);
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut members = Vec::new();
    for (k, &c) in select(&tree).iter().enumerate() {
        members.clear();
        subtree_points(&tree, c, &mut members);
        let keep: Box<dyn Fn(f64) -> bool> = if tree[c].parent.is_none() {
            let mut exits: Vec<f64> = members.iter().map(|&(_, l)| 1.0 / l).collect();
            exits.sort_by(f64::total_cmp);
            let q1 = quantile_sorted(&exits, 0.25);
            let q3 = quantile_sorted(&exits, 0.75);
            let fence = q3 + ROOT_FENCE * (q3 - q1);
            Box::new(move |l: f64| 1.0 / l <= fence)
        } else {
            Box::new(|_| true)
        };
        for &(p, l) in &members {
            if keep(l) {
                label[p] = Some(k);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut noise = Vec::new();
    let mut slot: Vec<Option<usize>> = Vec::new();
    for (p, l) in label.iter().enumerate() {
        match l {
            None => noise.push(p),
            Some(k) => {
                if slot.len() <= *k {
                    slot.resize(*k + 1, None);
                }
                let g = *slot[*k].get_or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(p);
            }
        }
    }
    ClusterSet { clusters: groups, noise }
}
