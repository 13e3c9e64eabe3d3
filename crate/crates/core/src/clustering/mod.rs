//! POI extraction from a single user's trajectory.
//!
//! Every algorithm returns clusters sorted by their lowest member index, with
//! ids assigned `0..n` in that order. Points an algorithm discards belong to
//! no cluster.

mod dbscan;
mod dj;
mod dt;
mod kmeans;
mod params;

pub use dbscan::{dbscan, dbscan_partition};
pub use dj::{dj_cluster, moving_points};
pub use dt::{dt_candidates, dt_cluster, generate_gt_candidates};
pub use kmeans::{kmeans, kmeans_fit, KMeansFit};
pub use params::{
    reference_grid, Algorithm, AlgorithmParams, DbscanParams, DjParams, DtParams, GtGenParams, KMeansParams,
};

use crate::error::Result;
use crate::geo::{index_runs, Cluster, Trajectory};

impl AlgorithmParams {
    pub fn run(&self, traj: &Trajectory) -> Result<Vec<Cluster>> {
        match self {
            AlgorithmParams::KMeans(p) => kmeans(traj, p),
            AlgorithmParams::Dbscan(p) => dbscan(traj, p),
            AlgorithmParams::DjCluster(p) => dj_cluster(traj, p),
            AlgorithmParams::DtCluster(p) => dt_cluster(traj, p),
            AlgorithmParams::GtGen(p) => generate_gt_candidates(traj, p),
        }
    }
}

/// Number of clusters the selected algorithm emits.
pub fn cluster_count_report(traj: &Trajectory, params: &AlgorithmParams) -> Result<usize> {
    Ok(params.run(traj)?.len())
}

/// A group of trajectory indices plus how many visits it represents.
#[derive(Debug, Clone)]
pub(crate) struct Group {
    pub members: Vec<usize>,
    pub visits: u32,
}

impl Group {
    /// Visit count taken as the number of contiguous index runs.
    pub(crate) fn from_indices(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        let visits = index_runs(&members);
        Group { members, visits }
    }
}

/// Sorts groups by lowest member index and builds clusters with sequential ids.
pub(crate) fn finalize(traj: &Trajectory, mut groups: Vec<Group>) -> Result<Vec<Cluster>> {
    for g in &mut groups {
        g.members.sort_unstable();
    }
    groups.retain(|g| !g.members.is_empty());
    groups.sort_by_key(|g| g.members[0]);
    groups
        .into_iter()
        .enumerate()
        .map(|(id, g)| Cluster::from_members(id as u32, traj, g.members, g.visits))
        .collect()
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when two distinct sets were joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    /// Components as lists of element indices, ordered by smallest element.
    pub(crate) fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

/// Repeatedly merges connected components of `related` until no related pair
/// remains among the rebuilt clusters.
pub(crate) fn merge_until_stable(
    traj: &Trajectory,
    mut groups: Vec<Group>,
    related: impl Fn(&Cluster, &Cluster) -> bool,
) -> Result<Vec<Cluster>> {
    loop {
        let clusters = finalize(traj, groups)?;
        let n = clusters.len();
        let mut uf = UnionFind::new(n);
        let mut merged = false;
        for i in 0..n {
            for j in i + 1..n {
                if related(&clusters[i], &clusters[j]) {
                    merged |= uf.union(i, j);
                }
            }
        }
        if !merged {
            return Ok(clusters);
        }
        groups = uf
            .components()
            .into_iter()
            .map(|comp| {
                let visits = comp.iter().map(|&c| clusters[c].visit_count).sum();
                let members = comp
                    .iter()
                    .flat_map(|&c| clusters[c].member_indices.iter().copied())
                    .collect();
                Group { members, visits }
            })
            .collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_find_components() {
        let mut uf = UnionFind::new(6);
        assert!(uf.union(4, 1));
        assert!(uf.union(1, 5));
        assert!(!uf.union(5, 4));
        assert!(uf.union(2, 3));
        assert_eq!(uf.components(), vec![vec![0], vec![1, 4, 5], vec![2, 3]]);
    }
}
