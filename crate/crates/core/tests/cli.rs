use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn soncluster(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soncluster"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = soncluster(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_writes_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "fit",
        "--generate",
        "half_moons:n1=15,n2=15,noise=0.05",
        "--gamma",
        "0.1",
        "--seed",
        "4",
    ];
    let out = ok(&[&args[..], &["--out", "a"]].concat(), dir.path());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "a");
    ok(&[&args[..], &["--out", "b"]].concat(), dir.path());
    for name in ["data.csv", "truth.csv", "path.csv", "labels.csv", "fit.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between identical runs");
    }
    // Manifests differ only in the output directory they record.
    let manifest = json(&dir.path().join("a/manifest.json"));
    let mut other = json(&dir.path().join("b/manifest.json"));
    other["config"]["out"] = manifest["config"]["out"].clone();
    assert_eq!(manifest, other);
    assert_eq!(manifest["mode"], "fit");
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["n"], 30);
    let labels = fs::read_to_string(dir.path().join("a/labels.csv")).unwrap();
    assert_eq!(labels.lines().filter(|l| !l.is_empty()).count(), 31);
}

#[test]
fn theory_flags_feasibility_with_separation() {
    let dir = tempfile::tempdir().unwrap();
    let mut flags = Vec::new();
    for r in ["1", "6"] {
        let spec = format!("two_balls:n=20,r={r}");
        ok(&["theory", "--generate", &spec, "--out", r], dir.path());
        let report = json(&dir.path().join(r).join("theory.json"));
        let panahi = report["intervals"]
            .as_array()
            .unwrap()
            .iter()
            .find(|iv| iv["family"] == "panahi_uniform")
            .unwrap()
            .clone();
        flags.push(panahi["interval"]["feasible"].as_bool().unwrap());
        if flags[flags.len() - 1] {
            assert_eq!(panahi["verification"]["pass_rate"], 1.0);
        }
    }
    assert_eq!(flags, vec![false, true]);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "mode = \"path\"\ngenerate = \"hierarchy_5x5\"\ngamma = \"geom:8\"\nout = \"from_file\"\nseed = 2\n",
    )
    .unwrap();
    ok(
        &["path", "--config", "run.toml", "--out", "from_flag", "--seed", "9"],
        dir.path(),
    );
    assert!(!dir.path().join("from_file").exists());
    let manifest = json(&dir.path().join("from_flag/manifest.json"));
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["gamma"], "geom:8");
    for name in ["path.csv", "dendrogram.json", "dendrogram.nwk"] {
        assert!(dir.path().join("from_flag").join(name).is_file(), "{name}");
    }
}

#[test]
fn errors_are_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = soncluster(&["fit", "--generate", "nope"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "invalid_argument");
    assert!(err["message"].as_str().unwrap().contains("nope"));

    let out = soncluster(&["fit", "--input", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io");

    fs::write(dir.path().join("bad.toml"), "mode = \"fit\"\nbogus = 1\n").unwrap();
    let out = soncluster(&["fit", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    assert!(serde_json::from_slice::<Value>(&out.stderr).is_ok());
}

#[test]
fn csv_input_with_gaps_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("gaps.csv"),
        "x,y\n0.0,0.1\n0.2,\n0.1,0.0\n5.0,5.1\n,5.0\n5.1,4.9\n",
    )
    .unwrap();
    ok(
        &[
            "fit",
            "--input",
            "gaps.csv",
            "--graph",
            "mst+knn:2",
            "--gamma",
            "0.05",
            "--out",
            "g",
        ],
        dir.path(),
    );
    let manifest = json(&dir.path().join("g/manifest.json"));
    assert_eq!(manifest["missing_entries"], 2);
    assert!(dir.path().join("g/labels.csv").is_file());

    fs::write(dir.path().join("dups.csv"), "0,0\n0,0\n1,0\n4,4\n4,4\n5,4\n").unwrap();
    ok(
        &[
            "path", "--input", "dups.csv", "--graph", "mst", "--gamma", "geom:6", "--out", "d",
        ],
        dir.path(),
    );
    // Rows are gamma,node,cluster; every original observation is labelled and
    // the repeated ones always share a cluster.
    let labels = fs::read_to_string(dir.path().join("d/labels.csv")).unwrap();
    let rows: Vec<Vec<&str>> = labels.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6 * 6);
    for snap in rows.chunks(6) {
        let nodes: Vec<&str> = snap.iter().map(|r| r[1]).collect();
        assert_eq!(nodes, ["0", "1", "2", "3", "4", "5"]);
        assert_eq!(snap[0][2], snap[1][2]);
        assert_eq!(snap[3][2], snap[4][2]);
    }

    let out = soncluster(&["theory", "--input", "dups.csv", "--out", "t"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn select_holdout_and_ebic() {
    let dir = tempfile::tempdir().unwrap();
    for criterion in ["ebic", "holdout"] {
        ok(
            &[
                "select",
                "--generate",
                "star_shaped",
                "--gamma",
                "geom:10",
                "--criterion",
                criterion,
                "--out",
                criterion,
            ],
            dir.path(),
        );
        let manifest = json(&dir.path().join(criterion).join("manifest.json"));
        assert!(
            manifest["summary"]["chosen_gamma"].as_f64().unwrap() > 0.0,
            "{criterion}"
        );
        assert!(manifest["files"].as_array().unwrap().len() >= 3);
    }
}
