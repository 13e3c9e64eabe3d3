use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use poikit::clustering::{reference_grid, Algorithm, AlgorithmParams};
use poikit::io::{self, ClusterRecord};
use poikit::synth::{self, SynthScenario};
use poikit::validation::{classify, link_to_centroids, roc_rates, sweep_counts, ConfusionCounts, RocPoint};
use poikit::{Cluster, Error, LatLon};

/// POI extraction from GPS trajectories and ROC validation against ground truth.
#[derive(Parser, Debug)]
#[command(name = "poikit", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster every user's trajectory and write the cluster document (JSON).
    Cluster(ClusterArgs),
    /// Score a cluster document against ground truth; prints counts and rates.
    Validate(ValidateArgs),
    /// Evaluate a parameter grid and write one ROC point per cell.
    Sweep(SweepArgs),
    /// Generate a synthetic scenario as a trajectory CSV and a ground-truth CSV.
    Synth(SynthArgs),
    /// Print the number of clusters per user.
    Count(CountArgs),
}

#[derive(Args, Debug)]
struct AlgoArgs {
    /// Algorithm: kmeans, dbscan, djcluster, dtcluster or gtgen.
    #[arg(long)]
    algo: String,
    /// Parameter override `key=value`, repeatable. Unset keys take their defaults.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Seed for k-means initialization.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    algo: AlgoArgs,
    /// Trajectory CSV.
    #[arg(long)]
    input: PathBuf,
    /// Cluster document to write.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Cluster document produced by `cluster`.
    #[arg(long)]
    clusters: PathBuf,
    /// Ground-truth CSV.
    #[arg(long)]
    ground_truth: PathBuf,
    /// Validation radius (meters).
    #[arg(long, default_value_t = poikit::validation::DEFAULT_VALIDATION_RADIUS_M)]
    d: f64,
    /// ROC CSV to write (one point for the whole document).
    #[arg(long)]
    roc_out: Option<PathBuf>,
    /// Label for the ROC point.
    #[arg(long, default_value = "validate")]
    label: String,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    algo: AlgoArgs,
    /// Trajectory CSV.
    #[arg(long)]
    trajectories: PathBuf,
    /// Ground-truth CSV.
    #[arg(long)]
    ground_truth: PathBuf,
    /// Validation radius (meters).
    #[arg(long, default_value_t = poikit::validation::DEFAULT_VALIDATION_RADIUS_M)]
    d: f64,
    /// Use the published grid for the algorithm instead of `--param` lists.
    #[arg(long, conflicts_with = "params")]
    reference_grid: bool,
    /// ROC CSV to write.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    users: usize,
    #[arg(long, default_value_t = 8)]
    pois: usize,
    #[arg(long, default_value_t = 14)]
    days: usize,
    /// Seconds between fixes.
    #[arg(long, default_value_t = 60)]
    sample_interval: i64,
    /// Shortest dwell (minutes).
    #[arg(long, default_value_t = 30.0)]
    dwell_min: f64,
    /// Longest dwell (minutes).
    #[arg(long, default_value_t = 120.0)]
    dwell_max: f64,
    /// Travel speed (km/h).
    #[arg(long, default_value_t = 20.0)]
    speed: f64,
    /// Per-axis GPS noise standard deviation (meters).
    #[arg(long, default_value_t = 12.0)]
    noise_sigma: f64,
    /// Fraction of ground-truth points annotated "no".
    #[arg(long, default_value_t = 0.5)]
    decoy_fraction: f64,
    /// Trajectory CSV to write.
    #[arg(long)]
    trajectories_out: PathBuf,
    /// Ground-truth CSV to write.
    #[arg(long)]
    ground_truth_out: PathBuf,
    /// Optional cluster document holding the true POIs, one cluster each.
    #[arg(long)]
    pois_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[command(flatten)]
    algo: AlgoArgs,
    /// Trajectory CSV.
    #[arg(long)]
    input: PathBuf,
    /// CSV `user_id,clusters` to write; printed to stdout either way.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let mut cmd = Cli::command();
    let vocab = format!("Parameters (key: meaning (unit, default)):\n{}", Algorithm::vocabulary_help());
    for name in ["cluster", "sweep", "count"] {
        cmd = cmd.mut_subcommand(name, |c| c.after_help(vocab.clone()));
    }
    let parsed = cmd
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };

    match configure_threads().and_then(|_| run(cli)) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{vocab}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("POIKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("POIKIT_THREADS must be a non-negative integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Cluster(a) => cluster(a),
        Command::Validate(a) => validate(a),
        Command::Sweep(a) => sweep(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Count(a) => count(a),
    }
}

fn split_pair(raw: &str) -> CliResult<(&str, &str)> {
    raw.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .ok_or_else(|| Failure::Usage(format!("expected --param key=value, got `{raw}`")))
}

fn algorithm(a: &AlgoArgs) -> CliResult<Algorithm> {
    a.algo.parse().map_err(|e: Error| Failure::Usage(e.to_string()))
}

/// A single parameter set from `--param` flags.
fn single_params(a: &AlgoArgs) -> CliResult<AlgorithmParams> {
    let algo = algorithm(a)?;
    let pairs = a.params.iter().map(|p| split_pair(p)).collect::<CliResult<Vec<_>>>()?;
    AlgorithmParams::from_pairs(algo, &pairs, a.seed).map_err(|e| Failure::Usage(e.to_string()))
}

/// The sweep grid: one `--param` may carry a comma-separated list of values.
fn grid_params(a: &AlgoArgs, reference: bool) -> CliResult<Vec<AlgorithmParams>> {
    let algo = algorithm(a)?;
    if reference {
        return Ok(reference_grid(algo, a.seed));
    }
    let pairs = a.params.iter().map(|p| split_pair(p)).collect::<CliResult<Vec<_>>>()?;
    let lists: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].1.contains(',')).collect();
    if lists.len() > 1 {
        return Err(Failure::Usage("only one --param may carry a comma-separated list".into()));
    }
    let usage = |e: Error| Failure::Usage(e.to_string());
    let Some(&axis) = lists.first() else {
        return Ok(vec![AlgorithmParams::from_pairs(algo, &pairs, a.seed).map_err(usage)?]);
    };
    pairs[axis]
        .1
        .split(',')
        .map(|v| {
            let mut cell = pairs.clone();
            cell[axis].1 = v.trim();
            AlgorithmParams::from_pairs(algo, &cell, a.seed).map_err(usage)
        })
        .collect()
}

fn check_d(d: f64) -> CliResult<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--d must be a positive number of meters, got {d}")))
    }
}

fn cluster_all(input: &Path, params: &AlgorithmParams) -> CliResult<BTreeMap<String, Vec<Cluster>>> {
    use rayon::prelude::*;
    let trajectories = io::read_trajectories(input)?;
    let results: Vec<(String, poikit::Result<Vec<Cluster>>)> = trajectories
        .par_iter()
        .map(|(user, t)| (user.clone(), params.run(t)))
        .collect();
    let mut out = BTreeMap::new();
    for (user, r) in results {
        let clusters = r.map_err(|e| Error::Cell {
            user: user.clone(),
            cell: params.label(),
            source: Box::new(e),
        })?;
        out.insert(user, clusters);
    }
    Ok(out)
}

fn cluster(a: ClusterArgs) -> CliResult<String> {
    let params = single_params(&a.algo)?;
    let clusters = cluster_all(&a.input, &params)?;
    io::write_clusters(&clusters, &a.output)?;
    let total: usize = clusters.values().map(Vec::len).sum();
    Ok(format!(
        "{} {}: {total} clusters for {} users -> {}\n",
        params.algorithm(),
        params.label(),
        clusters.len(),
        a.output.display()
    ))
}

fn count(a: CountArgs) -> CliResult<String> {
    let params = single_params(&a.algo)?;
    let clusters = cluster_all(&a.input, &params)?;
    let mut table = String::from("user_id,clusters\n");
    for (user, cs) in &clusters {
        let _ = writeln!(table, "{user},{}", cs.len());
    }
    if let Some(path) = &a.output {
        std::fs::write(path, &table).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(table)
}

fn rates_line(label: &str, c: &ConfusionCounts) -> String {
    let r = roc_rates(c);
    format!("{label}\t{}\t{}\t{}\t{}\t{}\t{}\n", c.tp, c.fp, c.tn, c.fn_, r.tpr, r.fpr)
}

fn validate(a: ValidateArgs) -> CliResult<String> {
    check_d(a.d)?;
    let records = io::read_clusters(&a.clusters)?;
    let ground_truth = io::read_ground_truth(&a.ground_truth)?;
    let mut centroids: BTreeMap<&str, Vec<(u32, LatLon)>> = BTreeMap::new();
    for r in &records {
        centroids.entry(&r.user_id).or_default().push((r.cluster_id, r.centroid()));
    }

    let mut out = String::from("user_id\ttp\tfp\ttn\tfn\ttpr\tfpr\n");
    let mut total = ConfusionCounts::default();
    for (user, gt) in &ground_truth {
        let cs = centroids.get(user.as_str()).map(Vec::as_slice).unwrap_or_default();
        let links = link_to_centroids(gt, cs)?;
        let counts = classify(&links, gt, a.d)?;
        out.push_str(&rates_line(user, &counts));
        total = total + counts;
    }
    out.push_str(&rates_line("total", &total));
    if let Some(path) = &a.roc_out {
        let r = roc_rates(&total);
        let point = RocPoint {
            parameter_label: a.label.clone(),
            fpr: r.fpr,
            tpr: r.tpr,
        };
        io::write_roc(&[point], path)?;
    }
    Ok(out)
}

fn sweep(a: SweepArgs) -> CliResult<String> {
    check_d(a.d)?;
    let grid = grid_params(&a.algo, a.reference_grid)?;
    let trajectories = io::read_trajectories(&a.trajectories)?;
    let ground_truth = io::read_ground_truth(&a.ground_truth)?;
    let cells = sweep_counts(&trajectories, &ground_truth, &grid, a.d)?;
    let points: Vec<RocPoint> = cells.iter().map(|c| c.roc_point()).collect();
    io::write_roc(&points, &a.output)?;
    let mut out = String::from("parameter_label\ttp\tfp\ttn\tfn\ttpr\tfpr\n");
    for c in &cells {
        out.push_str(&rates_line(&c.parameter_label, &c.counts));
    }
    Ok(out)
}

fn synth_cmd(a: SynthArgs) -> CliResult<String> {
    let sc = SynthScenario {
        seed: a.seed,
        n_users: a.users,
        n_pois_per_user: a.pois,
        n_days: a.days,
        sample_interval: a.sample_interval,
        dwell_minutes_range: (a.dwell_min, a.dwell_max),
        travel_speed_kmh: a.speed,
        gps_noise_sigma: a.noise_sigma,
        decoy_fraction: a.decoy_fraction,
        ..SynthScenario::default()
    };
    sc.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let out = synth::generate(&sc)?;
    io::write_trajectories(out.trajectories.values(), &a.trajectories_out)?;
    io::write_ground_truth(&out.ground_truth, &a.ground_truth_out)?;
    if let Some(path) = &a.pois_out {
        let records: Vec<ClusterRecord> = out
            .true_pois
            .iter()
            .flat_map(|(user, pois)| {
                let visits = &out.visits[user];
                pois.iter().enumerate().map(move |(i, p)| {
                    let mine: Vec<_> = visits.iter().filter(|v| v.poi == i).collect();
                    ClusterRecord {
                        user_id: user.clone(),
                        cluster_id: i as u32,
                        centroid_lat: p.lat,
                        centroid_lon: p.lon,
                        radius_m: 0.0,
                        visit_count: mine.len() as u32,
                        first_seen: mine.iter().map(|v| v.arrival).min().unwrap_or(0),
                        last_seen: mine.iter().map(|v| v.departure).max().unwrap_or(0),
                        member_count: 0,
                    }
                })
            })
            .collect();
        io::write_cluster_records(&records, path)?;
    }
    let fixes: usize = out.trajectories.values().map(|t| t.len()).sum();
    let gt: usize = out.ground_truth.values().map(Vec::len).sum();
    Ok(format!(
        "{} users, {fixes} fixes, {gt} ground-truth points (seed {})\n",
        out.trajectories.len(),
        a.seed
    ))
}
