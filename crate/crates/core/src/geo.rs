//! Geodetic primitives: coordinates, distance metrics, trajectories and clusters.
//!
//! Two metrics coexist. Algorithms parameterized in meters (DJ, DT, the
//! validation zone) use [`haversine`]; DBSCAN and ground-truth linking work in
//! raw degree space through [`euclidean_deg`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Length of one degree of arc on the mean sphere, in meters.
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

/// A latitude/longitude pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }

    /// Checks lat ∈ [-90, 90] and lon ∈ [-180, 180]. NaN is rejected.
    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }

    pub fn validated(lat: f64, lon: f64) -> Result<Self> {
        let p = LatLon::new(lat, lon);
        if p.is_valid() {
            Ok(p)
        } else {
            Err(Error::CoordinateOutOfRange { lat, lon })
        }
    }

    /// Moves the point by a local east/north offset in meters (small offsets only).
    pub fn offset_m(&self, east: f64, north: f64) -> LatLon {
        let lat = self.lat + north / METERS_PER_DEGREE;
        let lon = self.lon + east / (METERS_PER_DEGREE * self.lat.to_radians().cos());
        LatLon::new(lat, lon)
    }
}

impl From<(f64, f64)> for LatLon {
    fn from((lat, lon): (f64, f64)) -> Self {
        LatLon::new(lat, lon)
    }
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine(a: LatLon, b: LatLon) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    // h can drift above 1 by an ulp for antipodal points
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Euclidean distance in raw degree space.
pub fn euclidean_deg(a: LatLon, b: LatLon) -> f64 {
    (a.lat - b.lat).hypot(a.lon - b.lon)
}

/// Component-wise arithmetic mean of lat and lon.
///
/// Only meaningful for city-scale extents; no spherical averaging is done.
pub fn centroid<I>(points: I) -> Result<LatLon>
where
    I: IntoIterator<Item = LatLon>,
{
    // offsets from the first point keep the sums small and make the mean of
    // identical points exact
    let mut iter = points.into_iter();
    let origin = iter.next().ok_or(Error::EmptyPointSet)?;
    let mut lat = KahanSum::default();
    let mut lon = KahanSum::default();
    let mut n = 1usize;
    for p in iter {
        lat.add(p.lat - origin.lat);
        lon.add(p.lon - origin.lon);
        n += 1;
    }
    Ok(LatLon::new(
        origin.lat + lat.value() / n as f64,
        origin.lon + lon.value() / n as f64,
    ))
}

#[derive(Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Speed from `p` to `q` in km/h.
pub fn speed_between(p: &TrajectoryPoint, q: &TrajectoryPoint) -> Result<f64> {
    let dt = q.timestamp - p.timestamp;
    if dt <= 0 {
        return Err(Error::NonPositiveTimeDelta);
    }
    let meters = haversine(p.position(), q.position());
    Ok(meters / dt as f64 * 3.6)
}

/// One timestamped GPS fix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub user_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub lat: f64,
    pub lon: f64,
    /// Meters.
    pub alt: Option<f64>,
    /// km/h.
    pub speed: Option<f64>,
    /// Horizontal accuracy, meters.
    pub h_acc: Option<f64>,
    /// Vertical accuracy, meters.
    pub v_acc: Option<f64>,
}

impl TrajectoryPoint {
    pub fn new(user_id: impl Into<String>, timestamp: i64, lat: f64, lon: f64) -> Self {
        TrajectoryPoint {
            user_id: user_id.into(),
            timestamp,
            lat,
            lon,
            alt: None,
            speed: None,
            h_acc: None,
            v_acc: None,
        }
    }

    pub fn position(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position().is_valid() {
            return Err(Error::CoordinateOutOfRange {
                lat: self.lat,
                lon: self.lon,
            });
        }
        for (name, v) in [("speed", self.speed), ("h_acc", self.h_acc), ("v_acc", self.v_acc)] {
            if let Some(v) = v {
                if !(v >= 0.0) {
                    return Err(Error::InvalidPoint(format!("{name} must be non-negative, got {v}")));
                }
            }
        }
        if let Some(alt) = self.alt {
            if !alt.is_finite() {
                return Err(Error::InvalidPoint(format!("alt must be finite, got {alt}")));
            }
        }
        Ok(())
    }
}

/// A single user's fixes, sorted by timestamp with exact duplicates removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    user_id: String,
    points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    /// Validates every point, sorts by `(timestamp, lat, lon)` and drops records
    /// that repeat an earlier `(timestamp, lat, lon)` exactly.
    pub fn new(user_id: impl Into<String>, mut points: Vec<TrajectoryPoint>) -> Result<Self> {
        let user_id = user_id.into();
        for p in &points {
            p.validate()?;
            if p.user_id != user_id {
                return Err(Error::MixedUsers {
                    expected: user_id,
                    found: p.user_id.clone(),
                });
            }
        }
        points.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then(a.lat.total_cmp(&b.lat))
                .then(a.lon.total_cmp(&b.lon))
        });
        points.dedup_by(|b, a| a.timestamp == b.timestamp && a.lat == b.lat && a.lon == b.lon);
        Ok(Trajectory { user_id, points })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<LatLon> {
        self.points.iter().map(TrajectoryPoint::position).collect()
    }
}

/// An extracted POI candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: u32,
    pub centroid: LatLon,
    /// Max haversine distance from the centroid to any member, meters.
    pub radius: f64,
    /// Sorted indices into the source trajectory.
    pub member_indices: Vec<usize>,
    pub visit_count: u32,
    pub first_seen: i64,
    pub last_seen: i64,
}

impl Cluster {
    /// Builds a cluster from trajectory member indices, deriving centroid,
    /// radius and temporal span.
    pub fn from_members(
        id: u32,
        traj: &Trajectory,
        members: impl IntoIterator<Item = usize>,
        visit_count: u32,
    ) -> Result<Self> {
        let member_indices: Vec<usize> = members.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let pts = traj.points();
        let centroid = centroid(member_indices.iter().map(|&i| pts[i].position()))?;
        let radius = radius_about(centroid, member_indices.iter().map(|&i| pts[i].position()));
        let first_seen = member_indices.iter().map(|&i| pts[i].timestamp).min().unwrap_or_default();
        let last_seen = member_indices.iter().map(|&i| pts[i].timestamp).max().unwrap_or_default();
        Ok(Cluster {
            id,
            centroid,
            radius,
            member_indices,
            visit_count: visit_count.max(1),
            first_seen,
            last_seen,
        })
    }

    /// Radius recomputed from the trajectory; equals `self.radius` for any
    /// cluster built by this crate.
    pub fn recompute_radius(&self, traj: &Trajectory) -> f64 {
        radius_about(
            self.centroid,
            self.member_indices.iter().map(|&i| traj.points()[i].position()),
        )
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }
}

fn radius_about(c: LatLon, members: impl Iterator<Item = LatLon>) -> f64 {
    members.map(|p| haversine(c, p)).fold(0.0, f64::max)
}

/// Number of maximal runs of consecutive indices in a sorted index list.
pub(crate) fn index_runs(sorted: &[usize]) -> u32 {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted.windows(2).filter(|w| w[1] != w[0] + 1).count() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ll(lat: f64, lon: f64) -> LatLon {
        LatLon::new(lat, lon)
    }

    #[test]
    fn haversine_examples() {
        assert_eq!(haversine(ll(46.52, 6.58), ll(46.52, 6.58)), 0.0);
        // 6_371_000 * pi / 180
        assert!((haversine(ll(0.0, 0.0), ll(0.0, 1.0)) - 111_194.926_644_558_74).abs() < 0.1);
        // 6_371_000 * pi
        assert!((haversine(ll(0.0, 0.0), ll(0.0, 180.0)) - 20_015_086.796_020_57).abs() < 1.0);
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_deg(ll(1.0, 1.0), ll(1.0, 1.0)), 0.0);
        assert_eq!(euclidean_deg(ll(0.0, 0.0), ll(3.0, 4.0)), 5.0);
        assert!((euclidean_deg(ll(46.5, 6.5), ll(46.5, 6.503)) - 0.003).abs() < 1e-12);
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid([ll(46.5, 6.5)]).unwrap(), ll(46.5, 6.5));
        assert_eq!(centroid([ll(0.0, 0.0), ll(2.0, 2.0)]).unwrap(), ll(1.0, 1.0));
        let c = centroid([ll(46.50, 6.50), ll(46.52, 6.54), ll(46.54, 6.58)]).unwrap();
        assert!((c.lat - 46.52).abs() < 1e-12 && (c.lon - 6.54).abs() < 1e-12);
        assert!(matches!(centroid(Vec::new()), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn speed_examples() {
        let p = TrajectoryPoint::new("u", 0, 46.5, 6.5);
        let mut q = TrajectoryPoint::new("u", 60, 46.5, 6.5);
        assert_eq!(speed_between(&p, &q).unwrap(), 0.0);

        q.timestamp = 3600;
        q.lat = 46.5 + 1000.0 / METERS_PER_DEGREE;
        assert!((speed_between(&p, &q).unwrap() - 1.0).abs() < 1e-6);

        q.timestamp = 60;
        q.lat = 46.5 + 25.0 / METERS_PER_DEGREE;
        assert!((speed_between(&p, &q).unwrap() - 1.5).abs() < 1e-6);

        assert!(matches!(speed_between(&q, &p), Err(Error::NonPositiveTimeDelta)));
        assert!(matches!(speed_between(&p, &p), Err(Error::NonPositiveTimeDelta)));
    }

    #[test]
    fn trajectory_sorts_and_dedups() {
        let pts = vec![
            TrajectoryPoint::new("u", 20, 46.5, 6.5),
            TrajectoryPoint::new("u", 10, 46.5, 6.5),
            TrajectoryPoint::new("u", 20, 46.5, 6.5),
            TrajectoryPoint::new("u", 20, 46.6, 6.5),
        ];
        let t = Trajectory::new("u", pts).unwrap();
        let ts: Vec<i64> = t.points().iter().map(|p| p.timestamp).collect();
        assert_eq!(ts, vec![10, 20, 20]);
    }

    #[test]
    fn trajectory_rejects_bad_points() {
        let bad = vec![TrajectoryPoint::new("u", 0, 91.0, 0.0)];
        assert!(matches!(Trajectory::new("u", bad), Err(Error::CoordinateOutOfRange { .. })));
        let mut p = TrajectoryPoint::new("u", 0, 0.0, 0.0);
        p.speed = Some(-1.0);
        assert!(Trajectory::new("u", vec![p]).is_err());
        let other = vec![TrajectoryPoint::new("v", 0, 0.0, 0.0)];
        assert!(matches!(Trajectory::new("u", other), Err(Error::MixedUsers { .. })));
    }

    #[test]
    fn cluster_from_members() {
        let pts = vec![
            TrajectoryPoint::new("u", 0, 46.5, 6.5),
            TrajectoryPoint::new("u", 60, 46.5002, 6.5),
            TrajectoryPoint::new("u", 120, 46.6, 6.5),
        ];
        let t = Trajectory::new("u", pts).unwrap();
        let c = Cluster::from_members(3, &t, [1, 0], 1).unwrap();
        assert_eq!(c.member_indices, vec![0, 1]);
        assert_eq!((c.first_seen, c.last_seen), (0, 60));
        assert!((c.radius - 0.0001 * METERS_PER_DEGREE).abs() < 1e-3);
        assert_eq!(c.recompute_radius(&t), c.radius);
    }

    #[test]
    fn runs_of_indices() {
        assert_eq!(index_runs(&[]), 0);
        assert_eq!(index_runs(&[4]), 1);
        assert_eq!(index_runs(&[1, 2, 3, 7, 8, 10]), 3);
    }

    fn city() -> impl Strategy<Value = LatLon> {
        (46.4f64..46.6, 6.4f64..6.8).prop_map(|(a, b)| LatLon::new(a, b))
    }

    fn anywhere() -> impl Strategy<Value = LatLon> {
        (-90.0f64..=90.0, -180.0f64..=180.0).prop_map(|(a, b)| LatLon::new(a, b))
    }

    proptest! {
        #[test]
        fn metric_axioms(a in anywhere(), b in anywhere(), c in anywhere()) {
            for d in [haversine as fn(LatLon, LatLon) -> f64, euclidean_deg] {
                prop_assert_eq!(d(a, a), 0.0);
                prop_assert!(d(a, b) >= 0.0);
                prop_assert!((d(a, b) - d(b, a)).abs() <= 1e-9 * d(a, b).max(1.0));
                prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-6);
            }
        }

        #[test]
        fn centroid_permutation_invariant(pts in prop::collection::vec(city(), 1..60), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = centroid(pts).unwrap();
            let b = centroid(shuffled).unwrap();
            prop_assert!((a.lat - b.lat).abs() < 1e-12 && (a.lon - b.lon).abs() < 1e-12);
        }
    }
}
