//! CSV and JSON interchange formats.
//!
//! Loads are all-or-nothing: the first malformed row aborts the read and the
//! error names the row by its 1-based line number in the file (the header is
//! line 1).

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Cluster, LatLon, Trajectory, TrajectoryPoint};
use crate::validation::{Category, GroundTruthPoint, RocPoint};

pub const TRAJECTORY_HEADER: &str = "user_id,timestamp,lat,lon,alt,speed,h_acc,v_acc";
pub const GROUND_TRUTH_HEADER: &str = "user_id,gt_id,lat,lon,validated,category,other_text";
pub const ROC_HEADER: &str = "parameter_label,fpr,tpr";

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Reads records, checking the header line verbatim.
fn records<R: Read>(reader: R, header: &'static str) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut iter = rdr.records();
    match iter.next() {
        Some(Ok(h)) if h.iter().collect::<Vec<_>>().join(",") == header => {}
        _ => return Err(Error::BadHeader { expected: header }),
    }
    let width = header.split(',').count();
    for rec in iter {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let row = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(Error::Parse {
                row,
                msg: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        out.push((row, rec));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(row: u64, name: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse {
        row,
        msg: format!("bad {name} `{raw}`"),
    })
}

fn optional(row: u64, name: &str, raw: &str) -> Result<Option<f64>> {
    if raw.trim().is_empty() {
        Ok(None)
    } else {
        field(row, name, raw).map(Some)
    }
}

/// Integer seconds; a fractional part is truncated.
fn timestamp(row: u64, raw: &str) -> Result<i64> {
    let raw = raw.trim();
    if let Ok(t) = raw.parse::<i64>() {
        return Ok(t);
    }
    match raw.parse::<f64>() {
        Ok(t) if t.is_finite() && t.abs() < 9.0e15 => Ok(t.trunc() as i64),
        _ => Err(Error::Parse {
            row,
            msg: format!("bad timestamp `{raw}`"),
        }),
    }
}

fn parse_trajectory_rows<R: Read>(reader: R) -> Result<BTreeMap<String, Trajectory>> {
    let mut by_user: BTreeMap<String, Vec<TrajectoryPoint>> = BTreeMap::new();
    for (row, rec) in records(reader, TRAJECTORY_HEADER)? {
        let user_id = rec[0].to_string();
        if user_id.is_empty() {
            return Err(Error::Parse {
                row,
                msg: "empty user_id".into(),
            });
        }
        let point = TrajectoryPoint {
            user_id: user_id.clone(),
            timestamp: timestamp(row, &rec[1])?,
            lat: field(row, "lat", &rec[2])?,
            lon: field(row, "lon", &rec[3])?,
            alt: optional(row, "alt", &rec[4])?,
            speed: optional(row, "speed", &rec[5])?,
            h_acc: optional(row, "h_acc", &rec[6])?,
            v_acc: optional(row, "v_acc", &rec[7])?,
        };
        point.validate().map_err(|e| match e {
            Error::CoordinateOutOfRange { .. } => Error::RowCoordinateOutOfRange { row },
            other => Error::Parse {
                row,
                msg: other.to_string(),
            },
        })?;
        by_user.entry(user_id).or_default().push(point);
    }
    by_user
        .into_iter()
        .map(|(user, points)| Ok((user.clone(), Trajectory::new(user, points)?)))
        .collect()
}

/// Loads a trajectory CSV into per-user trajectories (sorted, deduplicated).
pub fn read_trajectories(path: impl AsRef<Path>) -> Result<BTreeMap<String, Trajectory>> {
    let path = path.as_ref();
    parse_trajectory_rows(open(path)?).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { .. } => e,
        Error::BadHeader { .. } | Error::Parse { .. } | Error::RowCoordinateOutOfRange { .. } => e,
        other => Error::Format {
            path: path.to_path_buf(),
            msg: other.to_string(),
        },
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trajectories<'a>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = String::new();
    body.push_str(TRAJECTORY_HEADER);
    body.push('\n');
    for t in trajectories {
        for p in t.points() {
            body.push_str(&csv_row(&[
                p.user_id.clone(),
                p.timestamp.to_string(),
                p.lat.to_string(),
                p.lon.to_string(),
                opt(p.alt),
                opt(p.speed),
                opt(p.h_acc),
                opt(p.v_acc),
            ]));
        }
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn csv_row(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    // writing to a Vec cannot fail
    w.write_record(fields).expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 fields")
}

fn parse_ground_truth_rows<R: Read>(reader: R) -> Result<BTreeMap<String, Vec<GroundTruthPoint>>> {
    let mut out: BTreeMap<String, Vec<GroundTruthPoint>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (row, rec) in records(reader, GROUND_TRUTH_HEADER)? {
        let user_id = rec[0].to_string();
        if user_id.is_empty() {
            return Err(Error::Parse {
                row,
                msg: "empty user_id".into(),
            });
        }
        let gt_id: i64 = field(row, "gt_id", &rec[1])?;
        let lat: f64 = field(row, "lat", &rec[2])?;
        let lon: f64 = field(row, "lon", &rec[3])?;
        if !LatLon::new(lat, lon).is_valid() {
            return Err(Error::RowCoordinateOutOfRange { row });
        }
        let validated = match rec[4].trim().to_ascii_lowercase().as_str() {
            "yes" => true,
            "no" => false,
            other => {
                return Err(Error::Parse {
                    row,
                    msg: format!("validated must be yes or no, got `{other}`"),
                })
            }
        };
        let token = rec[5].trim().to_ascii_lowercase();
        let category = if token.is_empty() {
            None
        } else {
            Some(token.parse::<Category>().map_err(|token| Error::UnknownCategory { row, token })?)
        };
        let other_text = Some(rec[6].to_string()).filter(|t| !t.is_empty());
        let point = GroundTruthPoint {
            gt_id,
            position: LatLon::new(lat, lon),
            validated,
            category,
            other_text,
        };
        point.validate().map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        if !seen.insert((user_id.clone(), gt_id)) {
            return Err(Error::DuplicateGtId { row, gt_id });
        }
        out.entry(user_id).or_default().push(point);
    }
    Ok(out)
}

/// Loads a ground-truth CSV into per-user annotation lists (file order kept).
pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<GroundTruthPoint>>> {
    let path = path.as_ref();
    parse_ground_truth_rows(open(path)?).map_err(|e| with_path(path, e))
}

pub fn write_ground_truth(gt: &BTreeMap<String, Vec<GroundTruthPoint>>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = String::new();
    body.push_str(GROUND_TRUTH_HEADER);
    body.push('\n');
    for (user, points) in gt {
        for g in points {
            body.push_str(&csv_row(&[
                user.clone(),
                g.gt_id.to_string(),
                g.position.lat.to_string(),
                g.position.lon.to_string(),
                if g.validated { "yes" } else { "no" }.to_string(),
                g.category.map(|c| c.as_str().to_string()).unwrap_or_default(),
                g.other_text.clone().unwrap_or_default(),
            ]));
        }
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// One serialized cluster. Field order is the document's key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterRecord {
    pub user_id: String,
    pub cluster_id: u32,
    pub centroid_lat: f64,
    pub centroid_lon: f64,
    pub radius_m: f64,
    pub visit_count: u32,
    pub first_seen: i64,
    pub last_seen: i64,
    pub member_count: usize,
}

impl ClusterRecord {
    pub fn new(user_id: &str, c: &Cluster) -> Self {
        ClusterRecord {
            user_id: user_id.to_string(),
            cluster_id: c.id,
            centroid_lat: c.centroid.lat,
            centroid_lon: c.centroid.lon,
            radius_m: c.radius,
            visit_count: c.visit_count,
            first_seen: c.first_seen,
            last_seen: c.last_seen,
            member_count: c.member_indices.len(),
        }
    }

    pub fn centroid(&self) -> LatLon {
        LatLon::new(self.centroid_lat, self.centroid_lon)
    }
}

/// Writes every user's clusters as one JSON array, users in key order.
pub fn write_clusters(clusters: &BTreeMap<String, Vec<Cluster>>, path: impl AsRef<Path>) -> Result<()> {
    let records: Vec<ClusterRecord> = clusters
        .iter()
        .flat_map(|(user, cs)| cs.iter().map(move |c| ClusterRecord::new(user, c)))
        .collect();
    write_cluster_records(&records, path)
}

pub fn write_cluster_records(records: &[ClusterRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, records)
        .map_err(std::io::Error::from)
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_clusters(path: impl AsRef<Path>) -> Result<Vec<ClusterRecord>> {
    let path = path.as_ref();
    serde_json::from_reader(open(path)?).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub fn write_roc(points: &[RocPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut body = String::new();
    body.push_str(ROC_HEADER);
    body.push('\n');
    for p in points {
        body.push_str(&csv_row(&[p.parameter_label.clone(), p.fpr.to_string(), p.tpr.to_string()]));
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_roc(path: impl AsRef<Path>) -> Result<Vec<RocPoint>> {
    let path = path.as_ref();
    let rows = records(open(path)?, ROC_HEADER).map_err(|e| with_path(path, e))?;
    rows.into_iter()
        .map(|(row, rec)| {
            Ok(RocPoint {
                parameter_label: rec[0].to_string(),
                fpr: field(row, "fpr", &rec[1])?,
                tpr: field(row, "tpr", &rec[2])?,
            })
        })
        .collect()
}
