//! Uniform-grid neighborhood search used by the density-based algorithms.

use std::collections::HashMap;

use crate::geo::{euclidean_deg, haversine, LatLon, EARTH_RADIUS_M};

/// Fixed-radius neighbor queries over a static point set.
pub(crate) trait Neighborhood {
    /// Calls `f(j)` for every `j` (including `i`) within the radius of point `i`.
    fn for_each_neighbor(&self, i: usize, f: impl FnMut(usize));

    #[cfg(test)]
    fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_neighbor(i, |j| out.push(j));
        out
    }

    fn count(&self, i: usize) -> usize {
        let mut n = 0;
        self.for_each_neighbor(i, |_| n += 1);
        n
    }
}

struct Grid<const D: usize> {
    keys: Vec<[i64; D]>,
    buckets: HashMap<[i64; D], Vec<usize>>,
}

impl<const D: usize> Grid<D> {
    fn new(coords: &[[f64; D]], cell: f64) -> Self {
        let keys: Vec<[i64; D]> = coords.iter().map(|c| c.map(|x| (x / cell).floor() as i64)).collect();
        let mut buckets: HashMap<[i64; D], Vec<usize>> = HashMap::new();
        for (i, k) in keys.iter().enumerate() {
            buckets.entry(*k).or_default().push(i);
        }
        Grid { keys, buckets }
    }

    fn for_each_candidate(&self, i: usize, mut f: impl FnMut(usize)) {
        let base = self.keys[i];
        // saturated keys can repeat a neighbor cell
        let mut seen: Vec<[i64; D]> = Vec::with_capacity(27);
        for code in 0..3usize.pow(D as u32) {
            let key = offset_key(base, code);
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            if let Some(bucket) = self.buckets.get(&key) {
                bucket.iter().for_each(|&j| f(j));
            }
        }
    }
}

fn offset_key<const D: usize>(base: [i64; D], mut code: usize) -> [i64; D] {
    let mut key = base;
    for k in key.iter_mut() {
        *k = k.saturating_add((code % 3) as i64 - 1);
        code /= 3;
    }
    key
}

/// Degree-space Euclidean neighborhoods, radius inclusive.
pub(crate) struct DegreeNeighborhood<'a> {
    points: &'a [LatLon],
    eps: f64,
    grid: Grid<2>,
}

impl<'a> DegreeNeighborhood<'a> {
    pub(crate) fn new(points: &'a [LatLon], eps: f64) -> Self {
        let coords: Vec<[f64; 2]> = points.iter().map(|p| [p.lat, p.lon]).collect();
        DegreeNeighborhood {
            points,
            eps,
            // slack covers rounding in the cell division
            grid: Grid::new(&coords, eps * (1.0 + 1e-9)),
        }
    }
}

impl Neighborhood for DegreeNeighborhood<'_> {
    fn for_each_neighbor(&self, i: usize, mut f: impl FnMut(usize)) {
        let p = self.points[i];
        self.grid.for_each_candidate(i, |j| {
            if euclidean_deg(p, self.points[j]) <= self.eps {
                f(j)
            }
        });
    }
}

/// Haversine neighborhoods, radius inclusive.
///
/// Buckets points by their position on the unit sphere in 3D; the chord
/// length is monotone in arc length, so a chord-sized cell never misses a
/// neighbor regardless of latitude or the antimeridian.
pub(crate) struct MeterNeighborhood<'a> {
    points: &'a [LatLon],
    radius: f64,
    grid: Grid<3>,
}

impl<'a> MeterNeighborhood<'a> {
    pub(crate) fn new(points: &'a [LatLon], radius_m: f64) -> Self {
        let angle = (radius_m / EARTH_RADIUS_M).min(std::f64::consts::PI);
        // slack covers rounding in the unit-vector coordinates
        let chord = (2.0 * (angle / 2.0).sin()).max(1e-12) * (1.0 + 1e-9);
        let coords: Vec<[f64; 3]> = points.iter().map(|p| unit_vector(*p)).collect();
        MeterNeighborhood {
            points,
            radius: radius_m,
            grid: Grid::new(&coords, chord),
        }
    }
}

fn unit_vector(p: LatLon) -> [f64; 3] {
    let (phi, lambda) = (p.lat.to_radians(), p.lon.to_radians());
    [phi.cos() * lambda.cos(), phi.cos() * lambda.sin(), phi.sin()]
}

impl Neighborhood for MeterNeighborhood<'_> {
    fn for_each_neighbor(&self, i: usize, mut f: impl FnMut(usize)) {
        let p = self.points[i];
        self.grid.for_each_candidate(i, |j| {
            if haversine(p, self.points[j]) <= self.radius {
                f(j)
            }
        });
    }
}
