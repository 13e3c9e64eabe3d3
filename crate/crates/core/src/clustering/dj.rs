use super::{finalize, DjParams, Group, UnionFind};
use crate::error::{Error, Result};
use crate::geo::{speed_between, Cluster, LatLon, Trajectory};
use crate::spatial::{MeterNeighborhood, Neighborhood};

/// Flags points whose speed from their predecessor exceeds `speed_threshold`.
///
/// The first point is never moving. A zero time delta between distinct
/// positions counts as moving.
pub fn moving_points(traj: &Trajectory, speed_threshold: f64) -> Vec<bool> {
    let pts = traj.points();
    let mut moving = vec![false; pts.len()];
    for i in 1..pts.len() {
        moving[i] = match speed_between(&pts[i - 1], &pts[i]) {
            Ok(v) => v > speed_threshold,
            Err(_) => pts[i - 1].position() != pts[i].position(),
        };
    }
    moving
}

/// DJ-Cluster: drop moving points, keep neighborhoods (radius `r`, closed)
/// of points with at least `min_pts` stationary neighbors, then merge
/// neighborhoods sharing a point.
pub fn dj_cluster(traj: &Trajectory, p: &DjParams) -> Result<Vec<Cluster>> {
    p.validate()?;
    if traj.len() < 2 {
        return Err(Error::TrajectoryTooShort);
    }
    let moving = moving_points(traj, p.speed_threshold);
    let kept: Vec<usize> = (0..traj.len()).filter(|&i| !moving[i]).collect();
    let positions: Vec<LatLon> = kept.iter().map(|&i| traj.points()[i].position()).collect();

    let nb = MeterNeighborhood::new(&positions, p.r);
    let core: Vec<bool> = (0..kept.len()).map(|i| nb.count(i) >= p.min_pts).collect();

    let mut uf = UnionFind::new(kept.len());
    let mut in_candidate = core.clone();
    for i in (0..kept.len()).filter(|&i| core[i]) {
        nb.for_each_neighbor(i, |j| {
            in_candidate[j] = true;
            uf.union(i, j);
        });
    }

    let groups = uf
        .components()
        .into_iter()
        .filter(|comp| comp.iter().any(|&i| core[i]))
        .map(|comp| {
            Group::from_indices(
                comp.into_iter()
                    .filter(|&i| in_candidate[i])
                    .map(|i| kept[i])
                    .collect(),
            )
        })
        .collect();
    finalize(traj, groups)
}
