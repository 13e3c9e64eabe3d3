use super::{finalize, merge_until_stable, DtParams, Group, GtGenParams};
use crate::error::{Error, Result};
use crate::geo::{haversine, Cluster, LatLon, Trajectory};

/// Time-ordered dwell runs: maximal runs of consecutive fixes each within `d`
/// meters of the run's running centroid, kept when their span exceeds `t`.
///
/// Each returned cluster is one run with `visit_count == 1`.
pub fn dt_candidates(traj: &Trajectory, d: f64, t: i64) -> Result<Vec<Cluster>> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let groups = dwell_runs(traj, d, t)
        .into_iter()
        .map(|run| Group {
            members: run.collect(),
            visits: 1,
        })
        .collect();
    finalize(traj, groups)
}

fn dwell_runs(traj: &Trajectory, d: f64, t: i64) -> Vec<std::ops::Range<usize>> {
    let pts = traj.points();
    let mut runs = Vec::new();
    let mut start = 0;
    while start < pts.len() {
        let (mut lat, mut lon) = (pts[start].lat, pts[start].lon);
        let mut end = start + 1;
        while end < pts.len() {
            let n = (end - start) as f64;
            let c = LatLon::new(lat / n, lon / n);
            if haversine(c, pts[end].position()) > d {
                break;
            }
            lat += pts[end].lat;
            lon += pts[end].lon;
            end += 1;
        }
        if pts[end - 1].timestamp - pts[start].timestamp > t {
            runs.push(start..end);
        }
        start = end;
    }
    runs
}

/// DT-Cluster: dwell runs merged transitively while any two centroids lie
/// within `d / 3`. The visit count of a merged cluster is its number of runs.
pub fn dt_cluster(traj: &Trajectory, p: &DtParams) -> Result<Vec<Cluster>> {
    p.validate()?;
    let candidates = dt_candidates(traj, p.d, p.t)?;
    let merge_radius = p.d / 3.0;
    merge_until_stable(traj, into_groups(candidates), |a, b| {
        haversine(a.centroid, b.centroid) <= merge_radius
    })
}

/// Candidate POIs for annotation: dwell runs merged while any two clusters
/// overlap (centroid distance at most the sum of radii), then filtered to
/// clusters visited at least `min_visits` times.
pub fn generate_gt_candidates(traj: &Trajectory, p: &GtGenParams) -> Result<Vec<Cluster>> {
    p.validate()?;
    let candidates = dt_candidates(traj, p.d, p.t)?;
    let merged = merge_until_stable(traj, into_groups(candidates), |a, b| {
        haversine(a.centroid, b.centroid) <= a.radius + b.radius
    })?;
    let kept = merged
        .into_iter()
        .filter(|c| c.visit_count >= p.min_visits)
        .map(|c| Group {
            members: c.member_indices,
            visits: c.visit_count,
        })
        .collect();
    finalize(traj, kept)
}

fn into_groups(clusters: Vec<Cluster>) -> Vec<Group> {
    clusters
        .into_iter()
        .map(|c| Group {
            members: c.member_indices,
            visits: c.visit_count,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::TrajectoryPoint;

    const HOME: LatLon = LatLon::new(46.52, 6.63);

    fn traj(points: &[(i64, LatLon)]) -> Trajectory {
        Trajectory::new(
            "u",
            points
                .iter()
                .map(|(t, q)| TrajectoryPoint::new("u", *t, q.lat, q.lon))
                .collect(),
        )
        .unwrap()
    }

    fn dwell(at: LatLon, start: i64, n: i64) -> Vec<(i64, LatLon)> {
        (0..n).map(|i| (start + i * 60, at)).collect()
    }

    fn trip(from: LatLon, to: LatLon, start: i64, steps: i64) -> Vec<(i64, LatLon)> {
        (1..steps)
            .map(|i| {
                let f = i as f64 / steps as f64;
                (
                    start + i * 60,
                    LatLon::new(from.lat + f * (to.lat - from.lat), from.lon + f * (to.lon - from.lon)),
                )
            })
            .collect()
    }

    #[test]
    fn single_long_dwell() {
        // 10 fixes spread over 1800 s
        let pts: Vec<(i64, LatLon)> = (0..10).map(|i| (i * 200, HOME)).collect();
        let c = dt_cluster(&traj(&pts), &DtParams { d: 60.0, t: 900 }).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].visit_count, 1);
        assert_eq!(c[0].len(), 10);
    }

    #[test]
    fn span_test_is_strict() {
        let pts = dwell(HOME, 0, 16); // spans exactly 900 s
        assert!(dt_cluster(&traj(&pts), &DtParams { d: 60.0, t: 900 }).unwrap().is_empty());
        let pts = dwell(HOME, 0, 17);
        assert_eq!(dt_cluster(&traj(&pts), &DtParams { d: 60.0, t: 900 }).unwrap().len(), 1);
    }

    #[test]
    fn constant_motion_yields_nothing() {
        let pts: Vec<(i64, LatLon)> = (0..200).map(|i| (i * 60, HOME.offset_m(500.0 * i as f64, 0.0))).collect();
        assert!(dt_cluster(&traj(&pts), &DtParams { d: 40.0, t: 900 }).unwrap().is_empty());
    }

    #[test]
    fn nearby_runs_merge_at_a_third_of_d() {
        let other = HOME.offset_m(15.0, 0.0);
        let away = HOME.offset_m(2000.0, 0.0);
        let mut pts = dwell(HOME, 0, 30);
        pts.extend(dwell(away, 30 * 60, 5)); // short stop elsewhere, 240 s
        pts.extend(dwell(other, 35 * 60, 30));
        let t = traj(&pts);
        assert_eq!(dt_candidates(&t, 60.0, 900).unwrap().len(), 2);
        let c = dt_cluster(&t, &DtParams { d: 60.0, t: 900 }).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].visit_count, 2);
        assert_eq!(c[0].len(), 60);

        // 15 m apart is beyond 40 / 3
        let c = dt_cluster(&t, &DtParams { d: 40.0, t: 900 }).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn running_centroid_membership() {
        // drift of 10 m per fix: each new fix stays within d of the running mean
        // until the spread grows past 2d
        let pts: Vec<(i64, LatLon)> = (0..40).map(|i| (i * 60, HOME.offset_m(10.0 * i as f64, 0.0))).collect();
        let runs = dwell_runs(&traj(&pts), 62.0, 0);
        // running mean of 0, 10, .. 10(n-1) is 5(n-1); next fix at 10n is 5n + 5 away
        // so a run holds 12 fixes (5*11 + 5 = 60 is within d, 65 is not)
        assert_eq!(runs[0], 0..12);
    }

    #[test]
    fn gt_overlap_merge() {
        // two clusters 50 m apart with 30 m radii overlap
        let a = HOME;
        let b = HOME.offset_m(50.0, 0.0);
        let ring = |c: LatLon, start: i64| -> Vec<(i64, LatLon)> {
            (0..20)
                .map(|i| {
                    let x = if i % 2 == 0 { 30.0 } else { -30.0 };
                    (start + i * 60, c.offset_m(x, 0.0))
                })
                .collect()
        };
        let far = HOME.offset_m(3000.0, 0.0);
        let mut pts = ring(a, 0);
        pts.extend(trip(a, far, 20 * 60, 10));
        pts.extend(ring(b, 40 * 60));
        let t = traj(&pts);
        let cands = dt_candidates(&t, 100.0, 900).unwrap();
        assert_eq!(cands.len(), 2);
        assert!((cands[0].radius - 30.0).abs() < 0.01);
        assert!((crate::geo::haversine(cands[0].centroid, cands[1].centroid) - 50.0).abs() < 0.01);
        let p = GtGenParams {
            d: 100.0,
            t: 900,
            min_visits: 2,
        };
        let c = generate_gt_candidates(&t, &p).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].visit_count, 2);
    }

    fn visits(n: usize) -> Trajectory {
        let elsewhere = HOME.offset_m(0.0, 5000.0);
        let mut pts = Vec::new();
        let mut clock = 0;
        for _ in 0..n {
            pts.extend(dwell(HOME, clock, 30));
            clock += 30 * 60;
            pts.extend(trip(HOME, elsewhere, clock, 20));
            clock += 20 * 60;
            pts.extend(dwell(elsewhere, clock, 5));
            clock += 5 * 60;
            pts.extend(trip(elsewhere, HOME, clock, 20));
            clock += 20 * 60;
        }
        traj(&pts)
    }

    #[test]
    fn gt_visit_filter() {
        let p = GtGenParams::default();
        assert!(generate_gt_candidates(&visits(2), &p).unwrap().is_empty());
        let c = generate_gt_candidates(&visits(3), &p).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].visit_count, 3);
    }

    #[test]
    fn empty_trajectory() {
        let t = Trajectory::new("u", vec![]).unwrap();
        assert!(matches!(dt_cluster(&t, &DtParams::default()), Err(Error::EmptyTrajectory)));
        assert!(matches!(
            generate_gt_candidates(&t, &GtGenParams::default()),
            Err(Error::EmptyTrajectory)
        ));
    }
}
