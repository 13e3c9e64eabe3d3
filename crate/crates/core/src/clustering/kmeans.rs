use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{finalize, Group, KMeansParams};
use crate::error::{Error, Result};
use crate::geo::{centroid, Cluster, LatLon, Trajectory};

/// Outcome of a k-means run including the per-iteration objective.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub clusters: Vec<Cluster>,
    /// Within-cluster sum of squared degree distances after each assignment step.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn kmeans(traj: &Trajectory, p: &KMeansParams) -> Result<Vec<Cluster>> {
    Ok(kmeans_fit(traj, p)?.clusters)
}

/// Lloyd iterations from `k` distinct input locations drawn uniformly with
/// the given seed. Clusters that lose all their points are dropped.
pub fn kmeans_fit(traj: &Trajectory, p: &KMeansParams) -> Result<KMeansFit> {
    p.validate()?;
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let points = traj.positions();

    let mut seen = HashSet::new();
    let distinct: Vec<LatLon> = points
        .iter()
        .copied()
        .filter(|q| seen.insert((q.lat.to_bits(), q.lon.to_bits())))
        .collect();
    let k = p.k.min(distinct.len());
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut centroids: Vec<LatLon> = rand::seq::index::sample(&mut rng, distinct.len(), k)
        .into_iter()
        .map(|i| distinct[i])
        .collect();

    let mut assignment: Vec<usize> = Vec::new();
    let mut sse_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < p.max_iterations {
        iterations += 1;
        let (next, sse) = assign(&points, &centroids);
        sse_history.push(sse);
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
        centroids = update(&points, &mut assignment, centroids.len());
    }

    let mut members = vec![Vec::new(); centroids.len()];
    for (i, &c) in assignment.iter().enumerate() {
        members[c].push(i);
    }
    let groups = members.into_iter().map(Group::from_indices).collect();
    Ok(KMeansFit {
        clusters: finalize(traj, groups)?,
        sse_history,
        iterations,
        converged,
    })
}

fn sq_dist(a: LatLon, b: LatLon) -> f64 {
    let (dl, dn) = (a.lat - b.lat, a.lon - b.lon);
    dl * dl + dn * dn
}

/// Nearest centroid per point (ties go to the lower centroid index) and the SSE.
fn assign(points: &[LatLon], centroids: &[LatLon]) -> (Vec<usize>, f64) {
    let mut sse = 0.0;
    let labels = points
        .iter()
        .map(|&q| {
            let mut best = (f64::INFINITY, 0);
            for (c, &m) in centroids.iter().enumerate() {
                let d = sq_dist(q, m);
                if d < best.0 {
                    best = (d, c);
                }
            }
            sse += best.0;
            best.1
        })
        .collect();
    (labels, sse)
}

/// Recomputes means, drops empty clusters and relabels `assignment` in place.
///
/// Means use the same summation as [`Cluster`] centroids, so a converged
/// assignment is exactly nearest-centroid for the emitted clusters.
fn update(points: &[LatLon], assignment: &mut [usize], k: usize) -> Vec<LatLon> {
    let mut members: Vec<Vec<LatLon>> = vec![Vec::new(); k];
    for (q, &c) in points.iter().zip(assignment.iter()) {
        members[c].push(*q);
    }
    let mut relabel = vec![usize::MAX; k];
    let mut centroids = Vec::with_capacity(k);
    for (c, m) in members.into_iter().enumerate() {
        if let Ok(mean) = centroid(m) {
            relabel[c] = centroids.len();
            centroids.push(mean);
        }
    }
    for c in assignment.iter_mut() {
        *c = relabel[*c];
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::TrajectoryPoint;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn traj_of(points: &[LatLon]) -> Trajectory {
        let pts = points
            .iter()
            .enumerate()
            .map(|(i, q)| TrajectoryPoint::new("u", i as i64 * 60, q.lat, q.lon))
            .collect();
        Trajectory::new("u", pts).unwrap()
    }

    /// Exact 2-means by enumerating every partition separable by a line through
    /// two input points; optimal 2-means partitions are linearly separable.
    fn best_two_partition(points: &[LatLon]) -> (Vec<usize>, Vec<usize>) {
        let n = points.len();
        let sse = |idx: &[usize]| -> f64 {
            if idx.is_empty() {
                return 0.0;
            }
            let m = idx.len() as f64;
            let c = LatLon::new(
                idx.iter().map(|&i| points[i].lat).sum::<f64>() / m,
                idx.iter().map(|&i| points[i].lon).sum::<f64>() / m,
            );
            idx.iter().map(|&i| sq_dist(points[i], c)).sum()
        };
        let mut best = (f64::INFINITY, Vec::new(), Vec::new());
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (points[i], points[j]);
                for mask in 0..4 {
                    let (mut left, mut right) = (Vec::new(), Vec::new());
                    for (k, q) in points.iter().enumerate() {
                        let side = if k == i {
                            mask & 1 == 1
                        } else if k == j {
                            mask & 2 == 2
                        } else {
                            (b.lat - a.lat) * (q.lon - a.lon) - (b.lon - a.lon) * (q.lat - a.lat) > 0.0
                        };
                        if side { left.push(k) } else { right.push(k) }
                    }
                    if left.is_empty() || right.is_empty() {
                        continue;
                    }
                    let total = sse(&left) + sse(&right);
                    if total < best.0 {
                        best = (total, left, right);
                    }
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn degenerate_single_location() {
        let t = traj_of(&vec![LatLon::new(46.5, 6.5); 50]);
        let c = kmeans(&t, &KMeansParams::new(1, 0)).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].centroid, LatLon::new(46.5, 6.5));
        assert_eq!(c[0].radius, 0.0);
        // k larger than the number of distinct locations
        let c = kmeans(&t, &KMeansParams::new(5, 0)).unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn two_blobs_match_exhaustive_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.0005).unwrap();
        let a = LatLon::new(46.50, 6.50);
        let b = a.offset_m(10_000.0, 0.0);
        let mut points = Vec::new();
        for centre in [a, b] {
            for _ in 0..20 {
                points.push(LatLon::new(
                    centre.lat + noise.sample(&mut rng),
                    centre.lon + noise.sample(&mut rng),
                ));
            }
        }
        let (left, right) = best_two_partition(&points);
        let mean = |idx: &[usize]| crate::geo::centroid(idx.iter().map(|&i| points[i])).unwrap();
        let mut expected = [mean(&left), mean(&right)];
        expected.sort_by(|x, y| x.lon.total_cmp(&y.lon));

        for seed in 0..5 {
            let t = traj_of(&points);
            let c = kmeans(&t, &KMeansParams::new(2, seed)).unwrap();
            assert_eq!(c.len(), 2);
            let mut got = [c[0].centroid, c[1].centroid];
            got.sort_by(|x, y| x.lon.total_cmp(&y.lon));
            for (g, e) in got.iter().zip(expected.iter()) {
                assert!((g.lat - e.lat).abs() < 1e-12 && (g.lon - e.lon).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<LatLon> = (0..300)
            .map(|_| LatLon::new(46.5 + rng.gen_range(0.0..0.05), 6.6 + rng.gen_range(0.0..0.05)))
            .collect();
        let t = traj_of(&pts);
        let p = KMeansParams::new(1000, 42);
        let a = kmeans(&t, &p).unwrap();
        let b = kmeans(&t, &p).unwrap();
        assert_eq!(a, b);
        assert!(a.len() <= 300);
        let covered: usize = a.iter().map(|c| c.len()).sum();
        assert_eq!(covered, 300);
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<LatLon> = (0..200)
            .map(|_| LatLon::new(46.5 + rng.gen_range(0.0..0.05), 6.6 + rng.gen_range(0.0..0.05)))
            .collect();
        let fit = kmeans_fit(&traj_of(&pts), &KMeansParams::new(8, 1)).unwrap();
        assert!(fit.converged);
        for w in fit.sse_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn empty_trajectory() {
        let t = Trajectory::new("u", vec![]).unwrap();
        assert!(matches!(kmeans(&t, &KMeansParams::new(1, 0)), Err(Error::EmptyTrajectory)));
    }
}
