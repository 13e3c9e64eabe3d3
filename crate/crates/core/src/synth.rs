//! Seeded synthetic mobility traces with known POIs.
//!
//! Each user owns a set of true POIs inside a ~10 km urban box. Every day the
//! user performs a sequence of dwells at POIs joined by straight constant-speed
//! trips; some trips contain a brief stop too short to count as a POI. Fixes
//! are sampled on a fixed grid during the active part of the day, with
//! Gaussian positional noise that is correlated between consecutive fixes.
//! Ground truth marks every true POI "yes" and adds "no" decoys at random
//! locations in the box far from any POI.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{haversine, LatLon, Trajectory, TrajectoryPoint};
use crate::validation::{Category, GroundTruthPoint};

/// 2018-03-01T00:00:00Z.
pub const BASE_EPOCH: i64 = 1_519_862_400;
/// Offset of the first fix of every day from midnight UTC, seconds.
pub const DAY_START_OFFSET: i64 = 7 * 3600;
const DAY: i64 = 86_400;

/// Box center and half extents in meters.
pub const CITY_CENTER: LatLon = LatLon::new(46.52, 6.63);
const HALF_EXTENT_M: f64 = 5_000.0;

const MIN_POI_SEPARATION_M: f64 = 500.0;
/// Decoys and brief stops keep this far from every true POI.
pub const DECOY_EXCLUSION_M: f64 = 300.0;
const MIN_VISITS_PER_DAY: usize = 4;
const MIN_VISITS_PER_POI: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScenario {
    pub seed: u64,
    pub n_users: usize,
    pub n_pois_per_user: usize,
    pub n_days: usize,
    /// Seconds between fixes.
    pub sample_interval: i64,
    /// Dwell duration bounds, minutes.
    pub dwell_minutes_range: (f64, f64),
    pub travel_speed_kmh: f64,
    /// Per-axis standard deviation of the positional error, meters.
    pub gps_noise_sigma: f64,
    /// Lag-one correlation of the positional error between consecutive fixes.
    pub noise_correlation: f64,
    /// Fraction of ground-truth points annotated "no".
    pub decoy_fraction: f64,
    /// Chance that a trip contains a brief stop.
    pub brief_stop_probability: f64,
    /// Brief stop duration bounds, minutes.
    pub brief_stop_minutes_range: (f64, f64),
}

impl Default for SynthScenario {
    fn default() -> Self {
        SynthScenario {
            seed: 42,
            n_users: 5,
            n_pois_per_user: 8,
            n_days: 14,
            sample_interval: 60,
            dwell_minutes_range: (30.0, 120.0),
            travel_speed_kmh: 20.0,
            gps_noise_sigma: 12.0,
            noise_correlation: 0.9,
            decoy_fraction: 0.5,
            brief_stop_probability: 0.5,
            brief_stop_minutes_range: (11.0, 13.0),
        }
    }
}

impl SynthScenario {
    /// Default scenario sampled every 50 s instead of 60 s.
    pub fn sampling_50s() -> Self {
        SynthScenario {
            sample_interval: 50,
            ..SynthScenario::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n_users < 1 || self.n_pois_per_user < 1 || self.n_days < 1 {
            return bad("n_users, n_pois_per_user and n_days must be >= 1".into());
        }
        if self.sample_interval <= 0 {
            return bad(format!("sample_interval must be > 0, got {}", self.sample_interval));
        }
        for (name, (lo, hi)) in [
            ("dwell_minutes_range", self.dwell_minutes_range),
            ("brief_stop_minutes_range", self.brief_stop_minutes_range),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!("{name} must satisfy 0 < min <= max, got ({lo}, {hi})"));
            }
        }
        if !(self.travel_speed_kmh > 0.0 && self.travel_speed_kmh.is_finite()) {
            return bad(format!("travel_speed_kmh must be > 0, got {}", self.travel_speed_kmh));
        }
        if !(self.gps_noise_sigma >= 0.0 && self.gps_noise_sigma.is_finite()) {
            return bad(format!("gps_noise_sigma must be >= 0, got {}", self.gps_noise_sigma));
        }
        if !(0.0..1.0).contains(&self.noise_correlation) {
            return bad(format!("noise_correlation must be in [0, 1), got {}", self.noise_correlation));
        }
        if !(0.0..1.0).contains(&self.decoy_fraction) {
            return bad(format!("decoy_fraction must be in [0, 1), got {}", self.decoy_fraction));
        }
        if !(0.0..=1.0).contains(&self.brief_stop_probability) {
            return bad(format!(
                "brief_stop_probability must be in [0, 1], got {}",
                self.brief_stop_probability
            ));
        }
        Ok(())
    }

    /// Total dwell visits per user; every POI is visited the same number of times.
    pub fn visits_per_poi(&self) -> usize {
        let wanted = (MIN_VISITS_PER_DAY * self.n_days).max(MIN_VISITS_PER_POI * self.n_pois_per_user);
        wanted.div_ceil(self.n_pois_per_user)
    }

    pub fn user_id(index: usize) -> String {
        format!("u{index:03}")
    }
}

/// One dwell at a true POI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellVisit {
    pub poi: usize,
    /// First whole second spent at the POI.
    pub arrival: i64,
    /// Last whole second spent at the POI.
    pub departure: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub trajectories: BTreeMap<String, Trajectory>,
    pub ground_truth: BTreeMap<String, Vec<GroundTruthPoint>>,
    pub true_pois: BTreeMap<String, Vec<LatLon>>,
    pub visits: BTreeMap<String, Vec<DwellVisit>>,
}

struct UserTrace {
    trajectory: Trajectory,
    ground_truth: Vec<GroundTruthPoint>,
    pois: Vec<LatLon>,
    visits: Vec<DwellVisit>,
}

/// Generates every user's trace. Users draw from independent streams of the
/// scenario seed, so output is identical however the work is scheduled.
pub fn generate(sc: &SynthScenario) -> Result<SynthOutput> {
    sc.validate()?;
    let visits_per_day = (sc.visits_per_poi() * sc.n_pois_per_user).div_ceil(sc.n_days);
    let min_busy = visits_per_day as f64 * sc.dwell_minutes_range.0 * 60.0;
    if min_busy > (DAY - DAY_START_OFFSET) as f64 {
        return Err(Error::InfeasibleScenario(format!(
            "{visits_per_day} dwells per day of at least {} min exceed the day length",
            sc.dwell_minutes_range.0
        )));
    }
    let traces: Vec<UserTrace> = (0..sc.n_users)
        .into_par_iter()
        .map(|u| generate_user(sc, u))
        .collect::<Result<_>>()?;

    let mut out = SynthOutput {
        trajectories: BTreeMap::new(),
        ground_truth: BTreeMap::new(),
        true_pois: BTreeMap::new(),
        visits: BTreeMap::new(),
    };
    for (u, trace) in traces.into_iter().enumerate() {
        let id = SynthScenario::user_id(u);
        out.trajectories.insert(id.clone(), trace.trajectory);
        out.ground_truth.insert(id.clone(), trace.ground_truth);
        out.true_pois.insert(id.clone(), trace.pois);
        out.visits.insert(id, trace.visits);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Stay { at: LatLon, poi: Option<usize>, from: f64, to: f64 },
    Move { a: LatLon, b: LatLon, from: f64, to: f64 },
}

impl Segment {
    fn end(&self) -> f64 {
        match *self {
            Segment::Stay { to, .. } | Segment::Move { to, .. } => to,
        }
    }

    fn position(&self, t: f64) -> LatLon {
        match *self {
            Segment::Stay { at, .. } => at,
            Segment::Move { a, b, from, to } => {
                let f = if to > from { (t - from) / (to - from) } else { 1.0 };
                if f <= 0.0 {
                    a
                } else if f >= 1.0 {
                    b
                } else {
                    LatLon::new(a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon))
                }
            }
        }
    }
}

fn random_in_box(rng: &mut ChaCha8Rng) -> LatLon {
    CITY_CENTER.offset_m(
        rng.gen_range(-HALF_EXTENT_M..HALF_EXTENT_M),
        rng.gen_range(-HALF_EXTENT_M..HALF_EXTENT_M),
    )
}

fn far_from_all(p: LatLon, pois: &[LatLon], min_m: f64) -> bool {
    pois.iter().all(|&q| haversine(p, q) >= min_m)
}

fn place_pois(rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<LatLon>> {
    let mut pois = Vec::with_capacity(n);
    let mut attempts = 0;
    while pois.len() < n {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::InfeasibleScenario(format!(
                "cannot place {n} POIs {MIN_POI_SEPARATION_M} m apart"
            )));
        }
        let p = random_in_box(rng);
        if far_from_all(p, &pois, MIN_POI_SEPARATION_M) {
            pois.push(p);
        }
    }
    Ok(pois)
}

/// Repeated shuffles of the POI indices, with no POI visited twice in a row
/// when there is more than one POI.
fn visit_order(rng: &mut ChaCha8Rng, n_pois: usize, rounds: usize) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(n_pois * rounds);
    for _ in 0..rounds {
        let mut perm: Vec<usize> = (0..n_pois).collect();
        perm.shuffle(rng);
        if n_pois > 1 && order.last() == perm.first() {
            let j = rng.gen_range(1..n_pois);
            perm.swap(0, j);
        }
        order.extend(perm);
    }
    order
}

fn generate_user(sc: &SynthScenario, user: usize) -> Result<UserTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(user as u64 + 1);

    let user_id = SynthScenario::user_id(user);
    let pois = place_pois(&mut rng, sc.n_pois_per_user)?;
    let order = visit_order(&mut rng, pois.len(), sc.visits_per_poi());
    let per_day = order.len().div_ceil(sc.n_days);
    let speed_mps = sc.travel_speed_kmh / 3.6;
    let interval = sc.sample_interval as f64;

    let mut points = Vec::new();
    let mut visits = Vec::new();
    for (day, todays) in order.chunks(per_day).enumerate() {
        let day_start = BASE_EPOCH + day as i64 * DAY + DAY_START_OFFSET;
        let day_end = BASE_EPOCH + (day as i64 + 1) * DAY;
        let plan = plan_day(sc, &mut rng, &pois, todays, speed_mps);
        let busy = plan.last().map_or(0.0, Segment::end);
        if day_start as f64 + busy >= day_end as f64 {
            return Err(Error::InfeasibleScenario(format!(
                "day {day} needs {:.1} h of activity",
                busy / 3600.0
            )));
        }
        for seg in &plan {
            if let Segment::Stay { poi: Some(poi), from, to, .. } = *seg {
                visits.push(DwellVisit {
                    poi,
                    arrival: day_start + from.ceil() as i64,
                    departure: day_start + to.floor() as i64,
                });
            }
        }

        let mut noise = [0.0f64; 2];
        let mut seg_idx = 0;
        let n_fixes = (busy / interval).floor() as i64 + 1;
        for k in 0..n_fixes {
            let t = k as f64 * interval;
            while seg_idx + 1 < plan.len() && plan[seg_idx].end() < t {
                seg_idx += 1;
            }
            let seg = plan[seg_idx];
            let truth = seg.position(t);
            let moving = matches!(seg, Segment::Move { .. }) && t > 0.0 && t < seg.end();
            for e in noise.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *e = if k == 0 {
                    sc.gps_noise_sigma * z
                } else {
                    sc.noise_correlation * *e
                        + (1.0 - sc.noise_correlation.powi(2)).sqrt() * sc.gps_noise_sigma * z
                };
            }
            let observed = if sc.gps_noise_sigma > 0.0 {
                truth.offset_m(noise[0], noise[1])
            } else {
                truth
            };
            points.push(TrajectoryPoint {
                user_id: user_id.clone(),
                timestamp: day_start + k * sc.sample_interval,
                lat: observed.lat,
                lon: observed.lon,
                alt: None,
                speed: Some(if moving { sc.travel_speed_kmh } else { 0.0 }),
                h_acc: (sc.gps_noise_sigma > 0.0).then_some(sc.gps_noise_sigma),
                v_acc: None,
            });
        }
    }

    let ground_truth = annotate(sc, &mut rng, &pois)?;
    Ok(UserTrace {
        trajectory: Trajectory::new(user_id, points)?,
        ground_truth,
        pois,
        visits,
    })
}

/// Lays out one day as alternating stays and moves, times relative to the
/// first fix of the day.
fn plan_day(sc: &SynthScenario, rng: &mut ChaCha8Rng, pois: &[LatLon], todays: &[usize], speed: f64) -> Vec<Segment> {
    let mut plan = Vec::new();
    let mut clock = 0.0;
    let mut here: Option<LatLon> = None;
    for &poi in todays {
        let target = pois[poi];
        if let Some(from) = here {
            let legs = if from == target {
                // lone POI: an out-and-back trip to somewhere 1-2 km away
                let bearing = rng.gen_range(0.0..std::f64::consts::TAU);
                let dist = rng.gen_range(1_000.0..2_000.0);
                let turn = from.offset_m(dist * bearing.cos(), dist * bearing.sin());
                vec![(from, turn), (turn, target)]
            } else {
                vec![(from, target)]
            };
            for (a, b) in legs {
                travel(sc, rng, pois, a, b, speed, &mut clock, &mut plan);
            }
        }
        let minutes = rng.gen_range(sc.dwell_minutes_range.0..=sc.dwell_minutes_range.1);
        let to = clock + (minutes * 60.0).round();
        plan.push(Segment::Stay {
            at: target,
            poi: Some(poi),
            from: clock,
            to,
        });
        clock = to;
        here = Some(target);
    }
    plan
}

#[allow(clippy::too_many_arguments)]
fn travel(
    sc: &SynthScenario,
    rng: &mut ChaCha8Rng,
    pois: &[LatLon],
    a: LatLon,
    b: LatLon,
    speed: f64,
    clock: &mut f64,
    plan: &mut Vec<Segment>,
) {
    let push_move = |from: LatLon, to: LatLon, clock: &mut f64, plan: &mut Vec<Segment>| {
        let end = *clock + haversine(from, to) / speed;
        plan.push(Segment::Move {
            a: from,
            b: to,
            from: *clock,
            to: end,
        });
        *clock = end;
    };
    if rng.gen_bool(sc.brief_stop_probability) {
        let f = rng.gen_range(0.2..0.8);
        let stop = LatLon::new(a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon));
        if far_from_all(stop, pois, DECOY_EXCLUSION_M) {
            push_move(a, stop, clock, plan);
            let minutes = rng.gen_range(sc.brief_stop_minutes_range.0..=sc.brief_stop_minutes_range.1);
            let to = *clock + (minutes * 60.0).round();
            plan.push(Segment::Stay {
                at: stop,
                poi: None,
                from: *clock,
                to,
            });
            *clock = to;
            push_move(stop, b, clock, plan);
            return;
        }
    }
    push_move(a, b, clock, plan);
}

const YES_CATEGORIES: [Category; 9] = [
    Category::Residency,
    Category::Work,
    Category::Study,
    Category::Sustenance,
    Category::Shopping,
    Category::Sports,
    Category::Leisure,
    Category::Transport,
    Category::Other,
];

fn annotate(sc: &SynthScenario, rng: &mut ChaCha8Rng, pois: &[LatLon]) -> Result<Vec<GroundTruthPoint>> {
    let mut gt: Vec<GroundTruthPoint> = pois
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let category = YES_CATEGORIES[i % YES_CATEGORIES.len()];
            GroundTruthPoint {
                gt_id: i as i64,
                position: *p,
                validated: true,
                category: Some(category),
                other_text: (category == Category::Other).then(|| "errands".to_string()),
            }
        })
        .collect();

    let n_decoys = (pois.len() as f64 * sc.decoy_fraction / (1.0 - sc.decoy_fraction)).round() as usize;
    for j in 0..n_decoys {
        let p = (0..100_000)
            .map(|_| random_in_box(rng))
            .find(|&p| far_from_all(p, pois, DECOY_EXCLUSION_M))
            .ok_or_else(|| {
                Error::InfeasibleScenario(format!("no room for decoys {DECOY_EXCLUSION_M} m from every POI"))
            })?;
        gt.push(GroundTruthPoint {
            gt_id: (pois.len() + j) as i64,
            position: p,
            validated: false,
            category: None,
            other_text: None,
        });
    }
    Ok(gt)
}
