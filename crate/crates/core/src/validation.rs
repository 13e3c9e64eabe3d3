//! Distance-zone validation of extracted clusters against annotated ground truth.
//!
//! Each ground-truth point is linked to its closest cluster centroid in degree
//! space. The link passes distance validation when the haversine distance to
//! that centroid is at most `d` meters. Crossing the participant's yes/no with
//! the distance verdict gives TP/FP/TN/FN, and micro-averaged counts give one
//! ROC point per parameter cell.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::AlgorithmParams;
use crate::error::{Error, Result};
use crate::geo::{euclidean_deg, haversine, Cluster, LatLon, Trajectory};

/// Validation-zone radius used when none is given, meters.
pub const DEFAULT_VALIDATION_RADIUS_M: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Transport,
    Study,
    Residency,
    Work,
    Sustenance,
    Shopping,
    Sports,
    Leisure,
    Other,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Transport,
        Category::Study,
        Category::Residency,
        Category::Work,
        Category::Sustenance,
        Category::Shopping,
        Category::Sports,
        Category::Leisure,
        Category::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Transport => "transport",
            Category::Study => "study",
            Category::Residency => "residency",
            Category::Work => "work",
            Category::Sustenance => "sustenance",
            Category::Shopping => "shopping",
            Category::Sports => "sports",
            Category::Leisure => "leisure",
            Category::Other => "other",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// An annotated location: the participant's yes/no plus an optional label.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthPoint {
    pub gt_id: i64,
    pub position: LatLon,
    pub validated: bool,
    pub category: Option<Category>,
    /// Free text, only with [`Category::Other`].
    pub other_text: Option<String>,
}

impl GroundTruthPoint {
    pub fn new(gt_id: i64, lat: f64, lon: f64, validated: bool) -> Self {
        GroundTruthPoint {
            gt_id,
            position: LatLon::new(lat, lon),
            validated,
            category: None,
            other_text: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_valid() {
            return Err(Error::CoordinateOutOfRange {
                lat: self.position.lat,
                lon: self.position.lon,
            });
        }
        let has_text = self.other_text.as_deref().is_some_and(|t| !t.is_empty());
        if has_text && self.category != Some(Category::Other) {
            return Err(Error::InvalidGroundTruth(format!(
                "gt_id {}: other_text is only allowed with category `other`",
                self.gt_id
            )));
        }
        Ok(())
    }
}

/// Ground-truth point to nearest-cluster association.
#[derive(Debug, Clone, PartialEq)]
pub struct GtLink {
    pub gt_id: i64,
    /// `None` when there were no clusters to link to.
    pub cluster_id: Option<u32>,
    /// Centroid of the linked cluster.
    pub centroid: Option<LatLon>,
    /// Degree-space distance; `+inf` when unlinked.
    pub link_distance: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), |a, b| a + b)
    }
}

/// True/false positive rates. A zero denominator yields 0 and sets the flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocRates {
    pub fpr: f64,
    pub tpr: f64,
    pub fpr_undefined: bool,
    pub tpr_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub parameter_label: String,
    pub fpr: f64,
    pub tpr: f64,
}

/// Links every ground-truth point to the cluster whose centroid is closest in
/// degree space, ties going to the lowest cluster id.
pub fn link_ground_truth(gt: &[GroundTruthPoint], clusters: &[Cluster]) -> Result<Vec<GtLink>> {
    let centroids: Vec<(u32, LatLon)> = clusters.iter().map(|c| (c.id, c.centroid)).collect();
    link_to_centroids(gt, &centroids)
}

/// [`link_ground_truth`] over bare `(cluster_id, centroid)` pairs.
pub fn link_to_centroids(gt: &[GroundTruthPoint], centroids: &[(u32, LatLon)]) -> Result<Vec<GtLink>> {
    if gt.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    Ok(gt
        .iter()
        .map(|g| {
            let best = centroids
                .iter()
                .map(|&(id, c)| (euclidean_deg(g.position, c), id, c))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            match best {
                Some((dist, id, c)) => GtLink {
                    gt_id: g.gt_id,
                    cluster_id: Some(id),
                    centroid: Some(c),
                    link_distance: dist,
                },
                None => GtLink {
                    gt_id: g.gt_id,
                    cluster_id: None,
                    centroid: None,
                    link_distance: f64::INFINITY,
                },
            }
        })
        .collect())
}

/// Whether the linked centroid falls inside the radius-`d` validation zone.
pub fn distance_validation(g: &GroundTruthPoint, link: &GtLink, d: f64) -> bool {
    link.centroid.is_some_and(|c| haversine(g.position, c) <= d)
}

/// Tallies TP/FP/TN/FN for one evaluation with validation radius `d` meters.
pub fn classify(links: &[GtLink], gt: &[GroundTruthPoint], d: f64) -> Result<ConfusionCounts> {
    if !(d > 0.0) {
        return Err(Error::InvalidParams(format!("d must be > 0 meters, got {d}")));
    }
    let mut by_id: HashMap<i64, &GtLink> = HashMap::with_capacity(links.len());
    for l in links {
        if by_id.insert(l.gt_id, l).is_some() {
            return Err(Error::LinkMismatch(l.gt_id));
        }
    }
    let gt_ids: HashSet<i64> = gt.iter().map(|g| g.gt_id).collect();
    if let Some(stray) = links.iter().find(|l| !gt_ids.contains(&l.gt_id)) {
        return Err(Error::LinkMismatch(stray.gt_id));
    }
    let mut counts = ConfusionCounts::default();
    for g in gt {
        let link = by_id.get(&g.gt_id).ok_or(Error::LinkMismatch(g.gt_id))?;
        match (g.validated, distance_validation(g, link, d)) {
            (true, true) => counts.tp += 1,
            (false, true) => counts.fp += 1,
            (false, false) => counts.tn += 1,
            (true, false) => counts.fn_ += 1,
        }
    }
    Ok(counts)
}

pub fn roc_rates(c: &ConfusionCounts) -> RocRates {
    let ratio = |num: u64, den: u64| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
    let (tpr, tpr_undefined) = ratio(c.tp, c.tp + c.fn_);
    let (fpr, fpr_undefined) = ratio(c.fp, c.fp + c.tn);
    RocRates {
        fpr,
        tpr,
        fpr_undefined,
        tpr_undefined,
    }
}

/// Clusters one user's trajectory and scores the result against their ground truth.
pub fn evaluate_user(
    traj: &Trajectory,
    gt: &[GroundTruthPoint],
    params: &AlgorithmParams,
    d: f64,
) -> Result<ConfusionCounts> {
    let clusters = params.run(traj)?;
    let links = link_ground_truth(gt, &clusters)?;
    classify(&links, gt, d)
}

/// One sweep cell: the parameters' label and the micro-averaged counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub parameter_label: String,
    pub counts: ConfusionCounts,
}

impl SweepCell {
    pub fn roc_point(&self) -> RocPoint {
        let r = roc_rates(&self.counts);
        RocPoint {
            parameter_label: self.parameter_label.clone(),
            fpr: r.fpr,
            tpr: r.tpr,
        }
    }
}

/// Runs every grid cell for every user with ground truth, summing counts per cell.
///
/// Cells and users are evaluated in parallel on the current rayon pool; the
/// output follows grid order.
pub fn sweep_counts(
    trajectories: &BTreeMap<String, Trajectory>,
    ground_truth: &BTreeMap<String, Vec<GroundTruthPoint>>,
    grid: &[AlgorithmParams],
    d: f64,
) -> Result<Vec<SweepCell>> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty parameter grid".into()));
    }
    let mut users = Vec::with_capacity(ground_truth.len());
    for (user, gt) in ground_truth {
        let traj = trajectories
            .get(user)
            .ok_or_else(|| Error::MissingTrajectory(user.clone()))?;
        users.push((user, traj, gt.as_slice()));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..users.len()).map(move |u| (c, u)))
        .collect();
    let results: Vec<Result<ConfusionCounts>> = jobs
        .par_iter()
        .map(|&(c, u)| {
            let (user, traj, gt) = users[u];
            evaluate_user(traj, gt, &grid[c], d).map_err(|e| Error::Cell {
                user: user.clone(),
                cell: grid[c].label(),
                source: Box::new(e),
            })
        })
        .collect();

    let mut cells: Vec<SweepCell> = grid
        .iter()
        .map(|p| SweepCell {
            parameter_label: p.label(),
            counts: ConfusionCounts::default(),
        })
        .collect();
    for (&(c, _), r) in jobs.iter().zip(results) {
        cells[c].counts = cells[c].counts + r?;
    }
    Ok(cells)
}

/// One ROC point per grid cell, in grid order.
pub fn sweep(
    trajectories: &BTreeMap<String, Trajectory>,
    ground_truth: &BTreeMap<String, Vec<GroundTruthPoint>>,
    grid: &[AlgorithmParams],
    d: f64,
) -> Result<Vec<RocPoint>> {
    Ok(sweep_counts(trajectories, ground_truth, grid, d)?
        .iter()
        .map(SweepCell::roc_point)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster(id: u32, lat: f64, lon: f64) -> Cluster {
        Cluster {
            id,
            centroid: LatLon::new(lat, lon),
            radius: 0.0,
            member_indices: vec![id as usize],
            visit_count: 1,
            first_seen: 0,
            last_seen: 0,
        }
    }

    #[test]
    fn link_examples() {
        let gt = vec![GroundTruthPoint::new(1, 46.5, 6.5, true)];
        let l = link_ground_truth(&gt, &[cluster(0, 46.5, 6.5)]).unwrap();
        assert_eq!(l[0].cluster_id, Some(0));
        assert_eq!(l[0].link_distance, 0.0);

        let l = link_ground_truth(&gt, &[cluster(0, 46.5, 6.6), cluster(1, 46.5, 6.51)]).unwrap();
        assert_eq!(l[0].cluster_id, Some(1));

        let l = link_ground_truth(&gt, &[]).unwrap();
        assert_eq!(l[0].cluster_id, None);
        assert_eq!(l[0].link_distance, f64::INFINITY);

        assert!(matches!(link_ground_truth(&[], &[]), Err(Error::NoGroundTruth)));
    }

    #[test]
    fn link_ties_go_to_lowest_id() {
        let gt = vec![GroundTruthPoint::new(1, 0.0, 0.0, true)];
        let l = link_ground_truth(&gt, &[cluster(7, 0.0, 1.0), cluster(3, 0.0, -1.0), cluster(5, 1.0, 0.0)]).unwrap();
        assert_eq!(l[0].cluster_id, Some(3));
    }

    #[test]
    fn classify_examples() {
        let gt: Vec<GroundTruthPoint> = (0..4).map(|i| GroundTruthPoint::new(i, 46.5, 6.5, true)).collect();
        let links = link_ground_truth(&gt, &[cluster(0, 46.5, 6.5)]).unwrap();
        let c = classify(&links, &gt, 1.0).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 4, fp: 0, tn: 0, fn_: 0 });

        let gt: Vec<GroundTruthPoint> = (0..5).map(|i| GroundTruthPoint::new(i, 46.5 + i as f64 * 0.1, 6.5, i < 3)).collect();
        let links = link_ground_truth(&gt, &[cluster(0, 46.0, 6.0)]).unwrap();
        let c = classify(&links, &gt, 1e9).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 3, fp: 2, tn: 0, fn_: 0 });
    }

    #[test]
    fn classify_mismatch() {
        let gt = vec![GroundTruthPoint::new(1, 46.5, 6.5, true)];
        let mut links = link_ground_truth(&gt, &[cluster(0, 46.5, 6.5)]).unwrap();
        links[0].gt_id = 2;
        assert!(matches!(classify(&links, &gt, 100.0), Err(Error::LinkMismatch(2))));
        assert!(matches!(classify(&[], &gt, 100.0), Err(Error::LinkMismatch(1))));
        assert!(classify(&links, &gt, 0.0).is_err());
    }

    #[test]
    fn rates() {
        let r = roc_rates(&ConfusionCounts { tp: 3, fn_: 1, fp: 0, tn: 4 });
        assert_eq!((r.tpr, r.fpr), (0.75, 0.0));
        assert!(!r.tpr_undefined && !r.fpr_undefined);

        let r = roc_rates(&ConfusionCounts { tp: 0, fn_: 0, fp: 0, tn: 5 });
        assert_eq!((r.tpr, r.fpr), (0.0, 0.0));
        assert!(r.tpr_undefined && !r.fpr_undefined);

        let r = roc_rates(&ConfusionCounts { tp: 2, fn_: 2, fp: 3, tn: 1 });
        assert_eq!((r.tpr, r.fpr), (0.5, 0.75));
    }

    #[test]
    fn other_text_requires_other() {
        let mut g = GroundTruthPoint::new(1, 0.0, 0.0, true);
        g.other_text = Some("bakery".into());
        assert!(g.validate().is_err());
        g.category = Some(Category::Other);
        assert!(g.validate().is_ok());
    }
}
