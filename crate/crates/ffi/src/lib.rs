//! C ABI over the poikit library.
//!
//! Conventions:
//! - Every fallible function returns a [`PoiStatus`]; on anything other than
//!   `POI_STATUS_OK` a message is available from [`poikit_last_error`] on the
//!   same thread.
//! - Objects are opaque handles created by `*_new` / algorithm calls and
//!   released with the matching `*_free`. Passing NULL to a free function is
//!   a no-op.
//! - Panics never cross the boundary; they surface as `POI_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use poikit::clustering::{
    dbscan, dj_cluster, dt_cluster, generate_gt_candidates, kmeans, DbscanParams, DjParams, DtParams, GtGenParams,
    KMeansParams,
};
use poikit::validation::{classify, link_ground_truth, roc_rates, ConfusionCounts, GroundTruthPoint};
use poikit::{Cluster, Error, LatLon, Trajectory, TrajectoryPoint};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoiStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument was malformed (bad UTF-8, index out of range, ...).
    InvalidArgument = 2,
    /// Algorithm parameters violate their constraints.
    InvalidParams = 3,
    /// The input holds too few points for the operation.
    EmptyInput = 4,
    /// Input data is invalid (coordinates out of range, inconsistent links, ...).
    InvalidData = 5,
    /// An internal panic was caught.
    Panic = 6,
}

/// One input fix: epoch seconds and WGS84 degrees.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PoiPoint {
    pub timestamp: i64,
    pub lat: f64,
    pub lon: f64,
}

/// Summary of one cluster. `member_count` indices are available through
/// [`poikit_cluster_set_members`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PoiClusterInfo {
    pub id: u32,
    pub centroid_lat: f64,
    pub centroid_lon: f64,
    pub radius_m: f64,
    pub visit_count: u32,
    pub first_seen: i64,
    pub last_seen: i64,
    pub member_count: usize,
}

/// One annotated ground-truth location.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PoiGroundTruth {
    pub gt_id: i64,
    pub lat: f64,
    pub lon: f64,
    pub validated: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PoiCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

/// ROC coordinates; a rate whose denominator is zero is reported as 0 with
/// its `*_undefined` flag set.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PoiRates {
    pub fpr: f64,
    pub tpr: f64,
    pub fpr_undefined: bool,
    pub tpr_undefined: bool,
}

/// Opaque, immutable, sorted trajectory of one user.
pub struct PoiTrajectory(Trajectory);

/// Opaque list of clusters produced by one algorithm run.
pub struct PoiClusterSet(Vec<Cluster>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

type Failure = (PoiStatus, String);

fn status_of(e: &Error) -> PoiStatus {
    match e {
        Error::InvalidParams(_) => PoiStatus::InvalidParams,
        Error::EmptyPointSet | Error::EmptyTrajectory | Error::TrajectoryTooShort | Error::NoGroundTruth => {
            PoiStatus::EmptyInput
        }
        _ => PoiStatus::InvalidData,
    }
}

fn lib_err(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> Failure {
    (PoiStatus::NullPointer, format!("`{what}` is NULL"))
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PoiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PoiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            PoiStatus::Panic
        }
    }
}

/// Builds a slice from a C array; NULL is accepted only when `len == 0`.
unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if data.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(data, len))
    }
}

/// Message for the last failed call on this thread, or NULL if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn poikit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Great-circle distance in meters on a sphere of radius 6 371 000 m.
#[no_mangle]
pub extern "C" fn poikit_haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    poikit::haversine(LatLon::new(lat1, lon1), LatLon::new(lat2, lon2))
}

/// Builds a trajectory from `len` fixes. Points are sorted by time and exact
/// duplicates removed.
///
/// # Safety
/// `user_id` must be a NUL-terminated string, `points` must reference `len`
/// readable elements and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_trajectory_new(
    user_id: *const c_char,
    points: *const PoiPoint,
    len: usize,
    out: *mut *mut PoiTrajectory,
) -> PoiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if user_id.is_null() {
            return Err(null("user_id"));
        }
        let user = CStr::from_ptr(user_id)
            .to_str()
            .map_err(|_| (PoiStatus::InvalidArgument, "user_id is not valid UTF-8".to_string()))?;
        let pts = slice(points, len, "points")?
            .iter()
            .map(|p| TrajectoryPoint::new(user, p.timestamp, p.lat, p.lon))
            .collect();
        let traj = Trajectory::new(user, pts).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PoiTrajectory(traj)));
        Ok(())
    })
}

/// # Safety
/// `traj` must be NULL or a handle from [`poikit_trajectory_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn poikit_trajectory_free(traj: *mut PoiTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of fixes after sorting and deduplication; 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn poikit_trajectory_len(traj: *const PoiTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

unsafe fn run_algorithm(
    traj: *const PoiTrajectory,
    out: *mut *mut PoiClusterSet,
    algo: impl FnOnce(&Trajectory) -> poikit::Result<Vec<Cluster>>,
) -> PoiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        let clusters = algo(&t.0).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PoiClusterSet(clusters)));
        Ok(())
    })
}

/// Lloyd k-means in degree space, seeded.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_kmeans(
    traj: *const PoiTrajectory,
    k: usize,
    max_iterations: usize,
    seed: u64,
    out: *mut *mut PoiClusterSet,
) -> PoiStatus {
    let p = KMeansParams {
        k,
        max_iterations,
        seed,
    };
    run_algorithm(traj, out, |t| kmeans(t, &p))
}

/// DBSCAN with `eps` in degrees.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_dbscan(
    traj: *const PoiTrajectory,
    eps_deg: f64,
    min_pts: usize,
    out: *mut *mut PoiClusterSet,
) -> PoiStatus {
    let p = DbscanParams { eps: eps_deg, min_pts };
    run_algorithm(traj, out, |t| dbscan(t, &p))
}

/// DJ-Cluster with radius in meters and speed threshold in km/h.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_dj_cluster(
    traj: *const PoiTrajectory,
    r_m: f64,
    min_pts: usize,
    speed_threshold_kmh: f64,
    out: *mut *mut PoiClusterSet,
) -> PoiStatus {
    let p = DjParams {
        r: r_m,
        min_pts,
        speed_threshold: speed_threshold_kmh,
    };
    run_algorithm(traj, out, |t| dj_cluster(t, &p))
}

/// DT-Cluster with distance in meters and duration in seconds.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_dt_cluster(
    traj: *const PoiTrajectory,
    d_m: f64,
    t_s: i64,
    out: *mut *mut PoiClusterSet,
) -> PoiStatus {
    let p = DtParams { d: d_m, t: t_s };
    run_algorithm(traj, out, |t| dt_cluster(t, &p))
}

/// Ground-truth candidate generation.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_generate_gt_candidates(
    traj: *const PoiTrajectory,
    d_m: f64,
    t_s: i64,
    min_visits: u32,
    out: *mut *mut PoiClusterSet,
) -> PoiStatus {
    let p = GtGenParams {
        d: d_m,
        t: t_s,
        min_visits,
    };
    run_algorithm(traj, out, |t| generate_gt_candidates(t, &p))
}

/// # Safety
/// `set` must be NULL or a live cluster-set handle.
#[no_mangle]
pub unsafe extern "C" fn poikit_cluster_set_free(set: *mut PoiClusterSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of clusters; 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn poikit_cluster_set_len(set: *const PoiClusterSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

unsafe fn cluster_at<'a>(set: *const PoiClusterSet, index: usize) -> Result<&'a Cluster, Failure> {
    let s = set.as_ref().ok_or_else(|| null("set"))?;
    s.0.get(index).ok_or_else(|| {
        (
            PoiStatus::InvalidArgument,
            format!("cluster index {index} out of range (len {})", s.0.len()),
        )
    })
}

/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_cluster_set_get(
    set: *const PoiClusterSet,
    index: usize,
    out: *mut PoiClusterInfo,
) -> PoiStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let c = cluster_at(set, index)?;
        *out = PoiClusterInfo {
            id: c.id,
            centroid_lat: c.centroid.lat,
            centroid_lon: c.centroid.lon,
            radius_m: c.radius,
            visit_count: c.visit_count,
            first_seen: c.first_seen,
            last_seen: c.last_seen,
            member_count: c.member_indices.len(),
        };
        Ok(())
    })
}

/// Borrows the sorted trajectory indices of one cluster. The array lives as
/// long as the set.
///
/// # Safety
/// `set` must be a live handle; `members` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_cluster_set_members(
    set: *const PoiClusterSet,
    index: usize,
    members: *mut *const usize,
    len: *mut usize,
) -> PoiStatus {
    guard(|| {
        if members.is_null() {
            return Err(null("members"));
        }
        let len = len.as_mut().ok_or_else(|| null("len"))?;
        let c = cluster_at(set, index)?;
        *members = c.member_indices.as_ptr();
        *len = c.member_indices.len();
        Ok(())
    })
}

/// TPR and FPR for a confusion matrix.
///
/// # Safety
/// `counts` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_roc_rates(counts: *const PoiCounts, out: *mut PoiRates) -> PoiStatus {
    guard(|| {
        let c = counts.as_ref().ok_or_else(|| null("counts"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = roc_rates(&ConfusionCounts {
            tp: c.true_pos,
            fp: c.false_pos,
            tn: c.true_neg,
            fn_: c.false_neg,
        });
        *out = PoiRates {
            fpr: r.fpr,
            tpr: r.tpr,
            fpr_undefined: r.fpr_undefined,
            tpr_undefined: r.tpr_undefined,
        };
        Ok(())
    })
}

/// Links each ground-truth point to its nearest cluster centroid and counts
/// TP/FP/TN/FN for validation radius `d_m` meters. `set` may be NULL, which
/// is treated as no clusters.
///
/// # Safety
/// `gt` must reference `gt_len` readable elements and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poikit_validate(
    set: *const PoiClusterSet,
    gt: *const PoiGroundTruth,
    gt_len: usize,
    d_m: f64,
    out: *mut PoiCounts,
) -> PoiStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let clusters: &[Cluster] = set.as_ref().map_or(&[], |s| &s.0);
        let points: Vec<GroundTruthPoint> = slice(gt, gt_len, "gt")?
            .iter()
            .map(|g| GroundTruthPoint::new(g.gt_id, g.lat, g.lon, g.validated))
            .collect();
        for g in &points {
            g.validate().map_err(lib_err)?;
        }
        let links = link_ground_truth(&points, clusters).map_err(lib_err)?;
        let c = classify(&links, &points, d_m).map_err(lib_err)?;
        *out = PoiCounts {
            true_pos: c.tp,
            false_pos: c.fp,
            true_neg: c.tn,
            false_neg: c.fn_,
        };
        Ok(())
    })
}
