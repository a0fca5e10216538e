use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn aroi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aroi"))
        .current_dir(dir)
        .env_remove("AROI_STORE")
        .args(["--store", "store"])
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn setup(n: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = aroi(
        dir.path(),
        &["gen-synth", "--n", &n.to_string(), "--seed", "5", "--out", "data.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    std::fs::write(
        dir.path().join("m.toml"),
        "[dataset]\npath = \"data.csv\"\nid = \"id\"\n\n[sweep]\nfractions = [0.5, 0.8]\n\n[[sweep.families]]\nhyperparams = { family = \"logistic_regression\" }\n\n[[sweep.families]]\nhyperparams = { family = \"naive_bayes\" }\n",
    )
    .unwrap();
    dir
}

fn sweep(dir: &Path, manifest: &str, out: &str) -> String {
    let o = aroi(dir, &["sweep", manifest, "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o).trim().to_string()
}

#[test]
fn ingest_prints_hash_and_rejects_bad_columns() {
    let dir = setup(60);
    let o = aroi(dir.path(), &["ingest", "data.csv", "--id", "id", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["summary"]["n"], 60);
    assert_eq!(v["dataset_hash"].as_str().unwrap().len(), 64);

    let o = aroi(dir.path(), &["ingest", "data.csv", "--label", "verdict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error[MISSING_COLUMN]"));

    let o = aroi(dir.path(), &["ingest", "missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = stdout(&aroi(dir.path(), &["gen-synth", "--n", "50", "--seed", "9"]));
    let b = stdout(&aroi(dir.path(), &["gen-synth", "--n", "50", "--seed", "9"]));
    let c = stdout(&aroi(dir.path(), &["gen-synth", "--n", "50", "--seed", "10"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 51);
}

#[test]
fn sweep_is_reproducible_and_traceable() {
    let dir = setup(200);
    let run = sweep(dir.path(), "m.toml", "a.csv");
    sweep(dir.path(), "m.toml", "b.csv");
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());

    let text = String::from_utf8(a).unwrap();
    let manifest = std::fs::read(dir.path().join("m.toml")).unwrap();
    use sha2::Digest;
    let expected = hex::encode(sha2::Sha256::digest(&manifest));
    assert_eq!(text.lines().next().unwrap(), format!("# manifest_sha256: {expected}"));
    assert_eq!(text.lines().count(), 2 + 4);

    // The stored run embeds its manifest verbatim.
    let record: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join(format!("store/runs/{run}/record.json"))).unwrap())
            .unwrap();
    assert_eq!(record["manifest"].as_str().unwrap().as_bytes(), manifest.as_slice());
}

#[test]
fn sweep_rejects_invalid_manifests_with_exit_2() {
    let dir = setup(60);
    std::fs::write(
        dir.path().join("bad.toml"),
        "[dataset]\npath = \"data.csv\"\n[sweep]\nfractions = [0.9, 0.2]\n",
    )
    .unwrap();
    let o = aroi(dir.path(), &["sweep", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("INVALID_CONFIG"));

    std::fs::write(
        dir.path().join("typo.toml"),
        "[dataset]\npath = \"data.csv\"\nlabel_col = \"x\"\n",
    )
    .unwrap();
    let o = aroi(dir.path(), &["sweep", "typo.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("INVALID_MANIFEST"));
}

#[test]
fn roi_sensitivity_and_report() {
    let dir = setup(200);
    let run = sweep(dir.path(), "m.toml", "s.csv");

    let o = aroi(dir.path(), &["roi", &run, "--format", "csv"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.starts_with("# manifest_sha256: "));
    assert!(csv.lines().nth(1).unwrap().ends_with(",break_even"));
    assert_eq!(csv.lines().count(), 2 + 4);

    std::fs::write(dir.path().join("zero.toml"), "c_dg = 0.0\nc_l = 0.0\n").unwrap();
    let o = aroi(dir.path(), &["roi", &run, "--params", "zero.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error[ZERO_COST]"));

    let o = aroi(
        dir.path(),
        &[
            "sensitivity",
            &run,
            "--param",
            "c_resource",
            "--values",
            "400,440",
            "--family",
            "logistic_regression",
            "--fraction",
            "0.8",
            "--format",
            "json",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let grid = v["grid"].as_array().unwrap();
    let (r400, r440) = (grid[0]["roi"].as_f64().unwrap(), grid[1]["roi"].as_f64().unwrap());
    assert!((r440 - ((r400 + 1.0) / 1.1 - 1.0)).abs() < 1e-9);

    let o = aroi(dir.path(), &["sensitivity", &run, "--param", "c_gold", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("UNKNOWN_PARAMETER"));

    let o = aroi(dir.path(), &["report", &run]);
    assert!(o.status.success());
    let table = stdout(&o);
    let header = table.lines().next().unwrap();
    for col in ["fraction", "LR F1", "LR ROI", "NB F1", "NB ROI"] {
        assert!(header.contains(col), "{header}");
    }
    assert!(table.lines().any(|l| l.starts_with("80%")));

    let o = aroi(dir.path(), &["roi", "no-such-run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NOT_FOUND"));
}

#[test]
fn al_simulate_with_zero_budget_is_a_single_point() {
    let dir = setup(200);
    std::fs::write(
        dir.path().join("al.toml"),
        "[dataset]\npath = \"data.csv\"\n[active]\nannotation_budget = 0\n",
    )
    .unwrap();
    let o = aroi(dir.path(), &["al-simulate", "al.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "annotations,f1");
    assert!(rows[1].starts_with("0,"));
}
