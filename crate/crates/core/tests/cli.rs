use std::path::Path;
use std::process::{Command, Output};

fn poikit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poikit"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synth(dir: &Path) {
    let o = poikit(
        dir,
        &["synth", "--days", "7", "--trajectories-out", "t.csv", "--ground-truth-out", "g.csv", "--pois-out", "p.json"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validate_true_pois_gives_full_tpr() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let o = poikit(
        dir.path(),
        &["validate", "--clusters", "p.json", "--ground-truth", "g.csv", "--roc-out", "r.csv"],
    );
    assert!(o.status.success());
    let total = stdout(&o).lines().last().unwrap().to_string();
    assert_eq!(total, "total\t40\t0\t40\t0\t1\t0");
    let roc = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(roc, "parameter_label,fpr,tpr\nvalidate,0,1\n");
}

#[test]
fn kmeans_sweep_has_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let o = poikit(
        dir.path(),
        &[
            "sweep", "--algo", "kmeans", "--param", "k=10,30,100,200,300,1000", "--d", "100",
            "--trajectories", "t.csv", "--ground-truth", "g.csv", "--output", "roc.csv",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let roc = std::fs::read_to_string(dir.path().join("roc.csv")).unwrap();
    assert_eq!(roc.lines().count(), 7);
    assert!(roc.lines().nth(1).unwrap().starts_with("k=10 "));

    let o = poikit(
        dir.path(),
        &[
            "sweep", "--algo", "dtcluster", "--reference-grid",
            "--trajectories", "t.csv", "--ground-truth", "g.csv", "--output", "dt.csv",
        ],
    );
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("dt.csv")).unwrap().lines().count(), 6);
}

#[test]
fn single_dwell_fixture_gives_one_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("user_id,timestamp,lat,lon,alt,speed,h_acc,v_acc\n");
    for i in 0..20 {
        csv.push_str(&format!("u1,{},46.52,6.63,,,,\n", 1_000 + i * 60));
    }
    std::fs::write(dir.path().join("t.csv"), csv).unwrap();
    let o = poikit(
        dir.path(),
        &["cluster", "--algo", "dtcluster", "--param", "d=60", "--param", "t=900", "--input", "t.csv", "--output", "c.json"],
    );
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(doc.as_array().unwrap().len(), 1);

    let o = poikit(dir.path(), &["count", "--algo", "dtcluster", "--input", "t.csv"]);
    assert_eq!(stdout(&o), "user_id,clusters\nu1,1\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let usage = [
        vec!["frobnicate"],
        vec!["count", "--algo", "nope", "--input", "t.csv"],
        vec!["count", "--algo", "dbscan", "--param", "radius=3", "--input", "t.csv"],
        vec!["count", "--algo", "dbscan", "--param", "eps=-1", "--input", "t.csv"],
        vec!["count", "--algo", "dbscan", "--param", "eps", "--input", "t.csv"],
    ];
    for args in usage {
        let o = poikit(dir.path(), &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
    let o = poikit(dir.path(), &["count", "--algo", "dbscan", "--param", "radius=3", "--input", "t.csv"]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("accepted: eps, min_pts") && err.contains("degrees"), "{err}");

    let o = poikit(dir.path(), &["count", "--algo", "dbscan", "--input", "missing.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));

    std::fs::write(dir.path().join("bad.csv"), "lat,lon\n1,2\n").unwrap();
    let o = poikit(dir.path(), &["count", "--algo", "dbscan", "--input", "bad.csv"]);
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(poikit(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn help_lists_parameters_with_units() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["cluster", "sweep", "count"] {
        let help = stdout(&poikit(dir.path(), &[sub, "--help"]));
        for needle in ["eps", "degrees", "meters", "seconds", "km/h", "min_visits", "max_iterations"] {
            assert!(help.contains(needle), "{sub} --help lacks {needle}");
        }
    }
    let help = stdout(&poikit(dir.path(), &["validate", "--help"]));
    assert!(help.contains("meters"));
}
