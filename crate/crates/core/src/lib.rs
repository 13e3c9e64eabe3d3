//! Point-of-interest extraction from GPS trajectories and distance-based
//! validation against annotated ground truth.
//!
//! The pipeline: load a [`Trajectory`] per user, run one of the clustering
//! algorithms in [`clustering`] to get [`Cluster`]s, then link annotated
//! ground-truth points to cluster centroids and score them with
//! [`validation::classify`] and [`validation::roc_rates`].

pub mod clustering;
pub mod error;
pub mod geo;
pub mod io;
mod spatial;
pub mod synth;
pub mod validation;

pub use clustering::{cluster_count_report, Algorithm, AlgorithmParams};
pub use error::{Error, Result};
pub use geo::{centroid, euclidean_deg, haversine, Cluster, LatLon, Trajectory, TrajectoryPoint};
pub use validation::{ConfusionCounts, GroundTruthPoint, RocPoint, RocRates};
