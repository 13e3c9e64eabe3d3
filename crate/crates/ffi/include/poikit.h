#ifndef POIKIT_H
#define POIKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum PoiStatus {
  POI_STATUS_OK = 0,
  // A required pointer argument was NULL.
  POI_STATUS_NULL_POINTER = 1,
  // An argument was malformed (bad UTF-8, index out of range, ...).
  POI_STATUS_INVALID_ARGUMENT = 2,
  // Algorithm parameters violate their constraints.
  POI_STATUS_INVALID_PARAMS = 3,
  // The input holds too few points for the operation.
  POI_STATUS_EMPTY_INPUT = 4,
  // Input data is invalid (coordinates out of range, inconsistent links, ...).
  POI_STATUS_INVALID_DATA = 5,
  // An internal panic was caught.
  POI_STATUS_PANIC = 6,
} PoiStatus;

// Opaque list of clusters produced by one algorithm run.
typedef struct PoiClusterSet PoiClusterSet;

// Opaque, immutable, sorted trajectory of one user.
typedef struct PoiTrajectory PoiTrajectory;

// One input fix: epoch seconds and WGS84 degrees.
typedef struct PoiPoint {
  int64_t timestamp;
  double lat;
  double lon;
} PoiPoint;

// Summary of one cluster. `member_count` indices are available through
// [`poikit_cluster_set_members`].
typedef struct PoiClusterInfo {
  uint32_t id;
  double centroid_lat;
  double centroid_lon;
  double radius_m;
  uint32_t visit_count;
  int64_t first_seen;
  int64_t last_seen;
  size_t member_count;
} PoiClusterInfo;

typedef struct PoiCounts {
  uint64_t true_pos;
  uint64_t false_pos;
  uint64_t true_neg;
  uint64_t false_neg;
} PoiCounts;

// ROC coordinates; a rate whose denominator is zero is reported as 0 with
// its `*_undefined` flag set.
typedef struct PoiRates {
  double fpr;
  double tpr;
  bool fpr_undefined;
  bool tpr_undefined;
} PoiRates;

// One annotated ground-truth location.
typedef struct PoiGroundTruth {
  int64_t gt_id;
  double lat;
  double lon;
  bool validated;
} PoiGroundTruth;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL if none.
//
// The pointer stays valid until the next failing call on the same thread.
const char *poikit_last_error(void);

// Great-circle distance in meters on a sphere of radius 6 371 000 m.
double poikit_haversine(double lat1, double lon1, double lat2, double lon2);

// Builds a trajectory from `len` fixes. Points are sorted by time and exact
// duplicates removed.
//
// # Safety
// `user_id` must be a NUL-terminated string, `points` must reference `len`
// readable elements and `out` must be writable.
enum PoiStatus poikit_trajectory_new(const char *user_id,
                                     const struct PoiPoint *points,
                                     size_t len,
                                     struct PoiTrajectory **out);

// # Safety
// `traj` must be NULL or a handle from [`poikit_trajectory_new`] not yet freed.
void poikit_trajectory_free(struct PoiTrajectory *traj);

// Number of fixes after sorting and deduplication; 0 for NULL.
//
// # Safety
// `traj` must be NULL or a live handle.
size_t poikit_trajectory_len(const struct PoiTrajectory *traj);

// Lloyd k-means in degree space, seeded.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum PoiStatus poikit_kmeans(const struct PoiTrajectory *traj,
                             size_t k,
                             size_t max_iterations,
                             uint64_t seed,
                             struct PoiClusterSet **out);

// DBSCAN with `eps` in degrees.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum PoiStatus poikit_dbscan(const struct PoiTrajectory *traj,
                             double eps_deg,
                             size_t min_pts,
                             struct PoiClusterSet **out);

// DJ-Cluster with radius in meters and speed threshold in km/h.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum PoiStatus poikit_dj_cluster(const struct PoiTrajectory *traj,
                                 double r_m,
                                 size_t min_pts,
                                 double speed_threshold_kmh,
                                 struct PoiClusterSet **out);

// DT-Cluster with distance in meters and duration in seconds.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum PoiStatus poikit_dt_cluster(const struct PoiTrajectory *traj,
                                 double d_m,
                                 int64_t t_s,
                                 struct PoiClusterSet **out);

// Ground-truth candidate generation.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum PoiStatus poikit_generate_gt_candidates(const struct PoiTrajectory *traj,
                                             double d_m,
                                             int64_t t_s,
                                             uint32_t min_visits,
                                             struct PoiClusterSet **out);

// # Safety
// `set` must be NULL or a live cluster-set handle.
void poikit_cluster_set_free(struct PoiClusterSet *set);

// Number of clusters; 0 for NULL.
//
// # Safety
// `set` must be NULL or a live handle.
size_t poikit_cluster_set_len(const struct PoiClusterSet *set);

// # Safety
// `set` must be a live handle and `out` writable.
enum PoiStatus poikit_cluster_set_get(const struct PoiClusterSet *set,
                                      size_t index,
                                      struct PoiClusterInfo *out);

// Borrows the sorted trajectory indices of one cluster. The array lives as
// long as the set.
//
// # Safety
// `set` must be a live handle; `members` and `len` must be writable.
enum PoiStatus poikit_cluster_set_members(const struct PoiClusterSet *set,
                                          size_t index,
                                          const size_t **members,
                                          size_t *len);

// TPR and FPR for a confusion matrix.
//
// # Safety
// `counts` must be readable and `out` writable.
enum PoiStatus poikit_roc_rates(const struct PoiCounts *counts, struct PoiRates *out);

// Links each ground-truth point to its nearest cluster centroid and counts
// TP/FP/TN/FN for validation radius `d_m` meters. `set` may be NULL, which
// is treated as no clusters.
//
// # Safety
// `gt` must reference `gt_len` readable elements and `out` must be writable.
enum PoiStatus poikit_validate(const struct PoiClusterSet *set,
                               const struct PoiGroundTruth *gt,
                               size_t gt_len,
                               double d_m,
                               struct PoiCounts *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POIKIT_H */
