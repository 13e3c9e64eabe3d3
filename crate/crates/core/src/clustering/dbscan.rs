use super::{finalize, DbscanParams, Group, UnionFind};
use crate::error::{Error, Result};
use crate::geo::{euclidean_deg, Cluster, LatLon, Trajectory};
use crate::spatial::{DegreeNeighborhood, Neighborhood};

/// Density-based clustering in degree space.
///
/// A core point has at least `min_pts` points (itself included) within `eps`.
/// Clusters are the connected components of core points; each border point
/// joins the cluster of its nearest core neighbor, ties going to the core
/// point with the lowest trajectory index. Noise is dropped.
pub fn dbscan(traj: &Trajectory, p: &DbscanParams) -> Result<Vec<Cluster>> {
    p.validate()?;
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let groups = dbscan_partition(&traj.positions(), p)
        .into_iter()
        .map(Group::from_indices)
        .collect();
    finalize(traj, groups)
}

/// The clusters as sorted index lists, ordered by lowest member index.
pub fn dbscan_partition(points: &[LatLon], p: &DbscanParams) -> Vec<Vec<usize>> {
    let n = points.len();
    let nb = DegreeNeighborhood::new(points, p.eps);
    let core: Vec<bool> = (0..n).map(|i| nb.count(i) >= p.min_pts).collect();

    let mut uf = UnionFind::new(n);
    for i in (0..n).filter(|&i| core[i]) {
        nb.for_each_neighbor(i, |j| {
            if j > i && core[j] {
                uf.union(i, j);
            }
        });
    }

    let mut owner: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        if core[i] {
            owner[i] = Some(uf.find(i));
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        nb.for_each_neighbor(i, |j| {
            if core[j] {
                let d = euclidean_deg(points[i], points[j]);
                if best.is_none_or(|(bd, bj)| d < bd || (d == bd && j < bj)) {
                    best = Some((d, j));
                }
            }
        });
        owner[i] = best.map(|(_, j)| uf.find(j));
    }

    let mut slot = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, o) in owner.iter().enumerate() {
        if let Some(root) = *o {
            if slot[root] == usize::MAX {
                slot[root] = out.len();
                out.push(Vec::new());
            }
            out[slot[root]].push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::TrajectoryPoint;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn traj_of(points: &[LatLon]) -> Trajectory {
        let pts = points
            .iter()
            .enumerate()
            .map(|(i, q)| TrajectoryPoint::new("u", i as i64 * 60, q.lat, q.lon))
            .collect();
        Trajectory::new("u", pts).unwrap()
    }

    #[test]
    fn single_dense_blob() {
        let t = traj_of(&vec![LatLon::new(46.5, 6.5); 30]);
        for eps in [1e-9, 0.0001, 0.003] {
            let c = dbscan(&t, &DbscanParams { eps, min_pts: 30 }).unwrap();
            assert_eq!(c.len(), 1);
            assert_eq!(c[0].len(), 30);
        }
    }

    #[test]
    fn sparse_line_is_noise() {
        let eps = 0.001;
        let pts: Vec<LatLon> = (0..20).map(|i| LatLon::new(46.5, 6.5 + 2.0 * eps * i as f64)).collect();
        let c = dbscan(&traj_of(&pts), &DbscanParams { eps, min_pts: 2 }).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn two_gaussian_blobs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let noise = Normal::new(0.0, 0.0002).unwrap();
        let mut pts = Vec::new();
        for dlon in [0.0, 0.01] {
            for _ in 0..40 {
                pts.push(LatLon::new(46.5 + noise.sample(&mut rng), 6.5 + dlon + noise.sample(&mut rng)));
            }
        }
        let c = dbscan(&traj_of(&pts), &DbscanParams { eps: 0.001, min_pts: 30 }).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn border_tie_goes_to_lowest_core_index() {
        // two 3-point cores on either side of a border point equidistant from both
        let pts = vec![
            LatLon::new(0.0, -1.0),
            LatLon::new(0.0, -1.1),
            LatLon::new(0.0, -1.2),
            LatLon::new(0.0, 0.0),
            LatLon::new(0.0, 1.0),
            LatLon::new(0.0, 1.1),
            LatLon::new(0.0, 1.2),
        ];
        let part = dbscan_partition(&pts, &DbscanParams { eps: 1.0, min_pts: 3 });
        // point 3 has 3 neighbors (0, 3, 4) so it is core and bridges everything
        assert_eq!(part.len(), 1);

        let part = dbscan_partition(&pts, &DbscanParams { eps: 1.0, min_pts: 4 });
        // cores: 0 (0,1,2,3) and 4 (3,4,5,6); 3 is border equidistant to 0 and 4
        assert_eq!(part, vec![vec![0, 1, 2, 3], vec![4, 5, 6]]);
    }

    #[test]
    fn empty_trajectory() {
        let t = Trajectory::new("u", vec![]).unwrap();
        assert!(matches!(
            dbscan(&t, &DbscanParams { eps: 0.1, min_pts: 1 }),
            Err(Error::EmptyTrajectory)
        ));
    }
}
