use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Lloyd k-means in degree space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansParams {
            k,
            max_iterations: 100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidParams("k must be >= 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParams("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// DBSCAN; `eps` is a degree-space radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParams(format!("eps must be > 0 degrees, got {}", self.eps)));
        }
        if self.min_pts < 1 {
            return Err(Error::InvalidParams("min_pts must be >= 1".into()));
        }
        Ok(())
    }
}

/// DJ-Cluster: radius `r` in meters, `speed_threshold` in km/h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DjParams {
    pub r: f64,
    pub min_pts: usize,
    pub speed_threshold: f64,
}

impl Default for DjParams {
    fn default() -> Self {
        DjParams {
            r: 60.0,
            min_pts: 10,
            speed_threshold: 1.5,
        }
    }
}

impl DjParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidParams(format!("r must be > 0 meters, got {}", self.r)));
        }
        if self.min_pts < 1 {
            return Err(Error::InvalidParams("min_pts must be >= 1".into()));
        }
        if !(self.speed_threshold >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "speed_threshold must be >= 0 km/h, got {}",
                self.speed_threshold
            )));
        }
        Ok(())
    }
}

/// DT-Cluster: radius `d` in meters, minimum dwell `t` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtParams {
    pub d: f64,
    pub t: i64,
}

impl Default for DtParams {
    fn default() -> Self {
        DtParams { d: 60.0, t: 900 }
    }
}

impl DtParams {
    pub fn validate(&self) -> Result<()> {
        validate_dt(self.d, self.t)
    }
}

fn validate_dt(d: f64, t: i64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidParams(format!("d must be > 0 meters, got {d}")));
    }
    if t <= 0 {
        return Err(Error::InvalidParams(format!("t must be > 0 seconds, got {t}")));
    }
    Ok(())
}

/// Ground-truth candidate generation (DT runs, overlap merge, visit filter).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtGenParams {
    pub d: f64,
    pub t: i64,
    pub min_visits: u32,
}

impl Default for GtGenParams {
    fn default() -> Self {
        GtGenParams {
            d: 60.0,
            t: 900,
            min_visits: 3,
        }
    }
}

impl GtGenParams {
    pub fn validate(&self) -> Result<()> {
        validate_dt(self.d, self.t)?;
        if self.min_visits < 1 {
            return Err(Error::InvalidParams("min_visits must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    KMeans,
    Dbscan,
    DjCluster,
    DtCluster,
    GtGen,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::KMeans,
        Algorithm::Dbscan,
        Algorithm::DjCluster,
        Algorithm::DtCluster,
        Algorithm::GtGen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::Dbscan => "dbscan",
            Algorithm::DjCluster => "djcluster",
            Algorithm::DtCluster => "dtcluster",
            Algorithm::GtGen => "gtgen",
        }
    }

    /// Accepted `key=value` parameters with units and defaults.
    pub fn vocabulary(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Algorithm::KMeans => &[
                ("k", "number of clusters (count, default 30)"),
                ("max_iterations", "Lloyd iteration cap (count, default 100)"),
            ],
            Algorithm::Dbscan => &[
                ("eps", "neighborhood radius (degrees, default 0.001)"),
                ("min_pts", "core-point density incl. the point itself (count, default 30)"),
            ],
            Algorithm::DjCluster => &[
                ("r", "neighborhood radius (meters, default 60)"),
                ("min_pts", "density incl. the point itself (count, default 10)"),
                ("speed_threshold", "moving-point cutoff (km/h, default 1.5)"),
            ],
            Algorithm::DtCluster => &[
                ("d", "run radius (meters, default 60)"),
                ("t", "minimum run duration, strict (seconds, default 900)"),
            ],
            Algorithm::GtGen => &[
                ("d", "run radius (meters, default 60)"),
                ("t", "minimum run duration, strict (seconds, default 900)"),
                ("min_visits", "visit filter (count, default 3)"),
            ],
        }
    }

    /// Human-readable vocabulary for every algorithm, one line each.
    pub fn vocabulary_help() -> String {
        Algorithm::ALL
            .iter()
            .map(|a| {
                let keys: Vec<String> = a.vocabulary().iter().map(|(k, d)| format!("{k}: {d}")).collect();
                format!("{}: {}", a.name(), keys.join("; "))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown algorithm `{s}`; expected one of: kmeans, dbscan, djcluster, dtcluster, gtgen"
                ))
            })
    }
}

/// A fully specified parameter set for one algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgorithmParams {
    KMeans(KMeansParams),
    Dbscan(DbscanParams),
    DjCluster(DjParams),
    DtCluster(DtParams),
    GtGen(GtGenParams),
}

impl AlgorithmParams {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgorithmParams::KMeans(_) => Algorithm::KMeans,
            AlgorithmParams::Dbscan(_) => Algorithm::Dbscan,
            AlgorithmParams::DjCluster(_) => Algorithm::DjCluster,
            AlgorithmParams::DtCluster(_) => Algorithm::DtCluster,
            AlgorithmParams::GtGen(_) => Algorithm::GtGen,
        }
    }

    /// Default parameter set; `seed` only matters for k-means.
    pub fn default_for(algo: Algorithm, seed: u64) -> Self {
        match algo {
            Algorithm::KMeans => AlgorithmParams::KMeans(KMeansParams::new(30, seed)),
            Algorithm::Dbscan => AlgorithmParams::Dbscan(DbscanParams {
                eps: 0.001,
                min_pts: 30,
            }),
            Algorithm::DjCluster => AlgorithmParams::DjCluster(DjParams::default()),
            Algorithm::DtCluster => AlgorithmParams::DtCluster(DtParams::default()),
            Algorithm::GtGen => AlgorithmParams::GtGen(GtGenParams::default()),
        }
    }

    /// Starts from [`AlgorithmParams::default_for`] and applies `key=value`
    /// overrides. Unknown keys and unparsable values are rejected.
    pub fn from_pairs<K, V>(algo: Algorithm, pairs: &[(K, V)], seed: u64) -> Result<Self>
    where
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut params = AlgorithmParams::default_for(algo, seed);
        for (key, value) in pairs {
            params.set(key.as_ref(), value.as_ref())?;
        }
        params.validate()?;
        Ok(params)
    }

    /// Overrides one parameter by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("bad value `{value}` for `{key}`")))
        }
        let algo = self.algorithm();
        match (self, key) {
            (AlgorithmParams::KMeans(p), "k") => p.k = num(key, value)?,
            (AlgorithmParams::KMeans(p), "max_iterations") => p.max_iterations = num(key, value)?,
            (AlgorithmParams::Dbscan(p), "eps") => p.eps = num(key, value)?,
            (AlgorithmParams::Dbscan(p), "min_pts") => p.min_pts = num(key, value)?,
            (AlgorithmParams::DjCluster(p), "r") => p.r = num(key, value)?,
            (AlgorithmParams::DjCluster(p), "min_pts") => p.min_pts = num(key, value)?,
            (AlgorithmParams::DjCluster(p), "speed_threshold") => p.speed_threshold = num(key, value)?,
            (AlgorithmParams::DtCluster(p), "d") => p.d = num(key, value)?,
            (AlgorithmParams::DtCluster(p), "t") => p.t = num(key, value)?,
            (AlgorithmParams::GtGen(p), "d") => p.d = num(key, value)?,
            (AlgorithmParams::GtGen(p), "t") => p.t = num(key, value)?,
            (AlgorithmParams::GtGen(p), "min_visits") => p.min_visits = num(key, value)?,
            _ => {
                let keys: Vec<&str> = algo.vocabulary().iter().map(|(k, _)| *k).collect();
                return Err(Error::InvalidParams(format!(
                    "unknown parameter `{key}` for {algo}; accepted: {}",
                    keys.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgorithmParams::KMeans(p) => p.validate(),
            AlgorithmParams::Dbscan(p) => p.validate(),
            AlgorithmParams::DjCluster(p) => p.validate(),
            AlgorithmParams::DtCluster(p) => p.validate(),
            AlgorithmParams::GtGen(p) => p.validate(),
        }
    }

    /// Cell label, e.g. `eps=0.001 min_pts=30`. The k-means seed is omitted.
    pub fn label(&self) -> String {
        match self {
            AlgorithmParams::KMeans(p) => format!("k={} max_iterations={}", p.k, p.max_iterations),
            AlgorithmParams::Dbscan(p) => format!("eps={} min_pts={}", p.eps, p.min_pts),
            AlgorithmParams::DjCluster(p) => {
                format!("r={} min_pts={} speed_threshold={}", p.r, p.min_pts, p.speed_threshold)
            }
            AlgorithmParams::DtCluster(p) => format!("d={} t={}", p.d, p.t),
            AlgorithmParams::GtGen(p) => format!("d={} t={} min_visits={}", p.d, p.t, p.min_visits),
        }
    }
}

/// The published sweep grids: one axis per algorithm, others fixed.
pub fn reference_grid(algo: Algorithm, seed: u64) -> Vec<AlgorithmParams> {
    match algo {
        Algorithm::KMeans => [10, 30, 100, 200, 300, 1000]
            .into_iter()
            .map(|k| AlgorithmParams::KMeans(KMeansParams::new(k, seed)))
            .collect(),
        Algorithm::Dbscan => [0.003, 0.001, 0.0007, 0.0002, 0.0001]
            .into_iter()
            .map(|eps| AlgorithmParams::Dbscan(DbscanParams { eps, min_pts: 30 }))
            .collect(),
        Algorithm::DjCluster => [10, 20, 50, 100, 200, 500]
            .into_iter()
            .map(|min_pts| {
                AlgorithmParams::DjCluster(DjParams {
                    min_pts,
                    ..DjParams::default()
                })
            })
            .collect(),
        Algorithm::DtCluster => [40.0, 60.0, 100.0, 150.0, 300.0]
            .into_iter()
            .map(|d| AlgorithmParams::DtCluster(DtParams { d, t: 900 }))
            .collect(),
        Algorithm::GtGen => [40.0, 60.0, 100.0, 150.0, 300.0]
            .into_iter()
            .map(|d| {
                AlgorithmParams::GtGen(GtGenParams {
                    d,
                    ..GtGenParams::default()
                })
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_override_defaults() {
        let p = AlgorithmParams::from_pairs(Algorithm::DtCluster, &[("d", "40"), ("t", "600")], 0).unwrap();
        assert_eq!(p, AlgorithmParams::DtCluster(DtParams { d: 40.0, t: 600 }));
        let p = AlgorithmParams::from_pairs::<&str, &str>(Algorithm::KMeans, &[], 9).unwrap();
        assert_eq!(p, AlgorithmParams::KMeans(KMeansParams::new(30, 9)));
    }

    #[test]
    fn unknown_and_invalid_keys() {
        let err = AlgorithmParams::from_pairs(Algorithm::Dbscan, &[("radius", "1")], 0).unwrap_err();
        assert!(err.to_string().contains("accepted: eps, min_pts"));
        assert!(AlgorithmParams::from_pairs(Algorithm::Dbscan, &[("eps", "0")], 0).is_err());
        assert!(AlgorithmParams::from_pairs(Algorithm::Dbscan, &[("eps", "x")], 0).is_err());
        assert!(AlgorithmParams::from_pairs(Algorithm::KMeans, &[("k", "0")], 0).is_err());
        assert!(AlgorithmParams::from_pairs(Algorithm::DtCluster, &[("t", "-5")], 0).is_err());
        assert!(AlgorithmParams::from_pairs(Algorithm::GtGen, &[("min_visits", "0")], 0).is_err());
        assert!("hdbscan".parse::<Algorithm>().is_err());
    }

    #[test]
    fn grid_sizes() {
        let sizes: Vec<usize> = Algorithm::ALL.iter().map(|a| reference_grid(*a, 0).len()).collect();
        assert_eq!(sizes, vec![6, 5, 6, 5, 5]);
    }

    #[test]
    fn labels() {
        assert_eq!(
            AlgorithmParams::Dbscan(DbscanParams { eps: 0.0007, min_pts: 30 }).label(),
            "eps=0.0007 min_pts=30"
        );
        assert_eq!(AlgorithmParams::DtCluster(DtParams { d: 40.0, t: 900 }).label(), "d=40 t=900");
    }
}
