use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn specmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specmix"))
        .args(args)
        .env("SPECMIX_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut args = vec![
        "synth",
        "--n",
        "120",
        "--k",
        "3",
        "--q",
        "2",
        "--sigma",
        "0.5",
        "--p",
        "0.1",
        "--seed",
        "3",
        "--out",
        path(&out),
    ];
    args.extend_from_slice(extra);
    let res = specmix(&args);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    out
}

#[test]
fn synth_is_deterministic_and_labelled() {
    let dir = tempfile::tempdir().unwrap();
    let a = fs::read_to_string(synth(dir.path(), "a.csv", &[])).unwrap();
    let b = fs::read_to_string(synth(dir.path(), "b.csv", &[])).unwrap();
    assert_eq!(a, b);
    let header = a.lines().next().unwrap();
    assert_eq!(header, "x0,x1,x2,c0,c1,label");
    assert_eq!(a.lines().count(), 121);
}

#[test]
fn synth_full_corruption_avoids_true_category() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p1.csv");
    let res = specmix(&[
        "synth",
        "--n",
        "90",
        "--k",
        "3",
        "--q",
        "2",
        "--sigma",
        "1",
        "--p",
        "1",
        "--out",
        path(&out),
    ]);
    assert!(res.status.success());
    let mut reader = csv::Reader::from_path(&out).unwrap();
    for rec in reader.records() {
        let rec = rec.unwrap();
        assert_ne!(&rec[3], &rec[5]);
        assert_ne!(&rec[4], &rec[5]);
    }
}

#[test]
fn cluster_writes_json_and_purity() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.csv", &[]);
    let out = dir.path().join("res.json");
    let res = specmix(&[
        "cluster",
        "--data",
        path(&data),
        "--schema",
        "num,num,num,cat,cat,label",
        "--method",
        "specmix",
        "--k",
        "3",
        "--lambda",
        "2",
        "--seed",
        "1",
        "--out",
        path(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.starts_with("purity_weighted="), "{stdout}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["method"], "specmix");
    assert_eq!(json["labels"].as_array().unwrap().len(), 120);
    assert_eq!(json["n"], 120);
    assert!(json["purity_weighted"].as_f64().unwrap() > 0.9);
    assert_eq!(json["eigenvalues"].as_array().unwrap().len(), 3);

    // same seed, same answer; JSON goes to stdout without --out
    let again = specmix(&[
        "cluster",
        "--data",
        path(&data),
        "--schema",
        "num,num,num,cat,cat,label",
        "--method",
        "specmix",
        "--k",
        "3",
        "--lambda",
        "2",
        "--seed",
        "1",
    ]);
    let streamed: serde_json::Value = serde_json::from_slice(&again.stdout).unwrap();
    assert_eq!(streamed["labels"], json["labels"]);
}

#[test]
fn every_method_runs_from_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.csv", &[]);
    for method in [
        "specmix",
        "onlycat",
        "numeric-spectral",
        "kmodes",
        "kprototypes",
    ] {
        let res = specmix(&[
            "cluster",
            "--data",
            path(&data),
            "--schema",
            "num,num,num,cat,cat,label",
            "--method",
            method,
            "--k",
            "3",
        ]);
        assert!(
            res.status.success(),
            "{method}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        let json: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
        assert_eq!(json["method"], method);
    }
}

#[test]
fn specmix_without_numeric_columns_is_a_routing_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.csv", &[]);
    let res = specmix(&[
        "cluster",
        "--data",
        path(&data),
        "--schema",
        "ignore,ignore,ignore,cat,cat,label",
        "--method",
        "specmix",
        "--k",
        "3",
    ]);
    assert_eq!(res.status.code(), Some(8));
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["error"]["category"], "routing");
}

#[test]
fn missing_schema_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.csv", &[]);
    let res = specmix(&[
        "cluster",
        "--data",
        path(&data),
        "--method",
        "specmix",
        "--k",
        "3",
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let res = specmix(&[
        "cluster",
        "--data",
        "/nonexistent/x.csv",
        "--schema",
        "num",
        "--method",
        "onlycat",
        "--k",
        "2",
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn eval_scores_a_result_against_truth() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.csv", &[]);
    let res = specmix(&["eval", "--pred", path(&data), "--truth", path(&data)]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(report["purity_weighted"], 1.0);
}

#[test]
fn sweep_writes_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("grid.toml");
    fs::write(
        &config,
        "n = [60]\nk = [2]\nq = [2]\nsigma = [0.5]\np = [0.1]\nlambda = [0, 5]\nmethods = [\"specmix\", \"onlycat\"]\nrepetitions = 2\nrestarts = 2\n",
    )
    .unwrap();
    let out = dir.path().join("res.csv");
    let run = || specmix(&["sweep", "--config", path(&config), "--out", path(&out)]);
    let first = run();
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let long = fs::read_to_string(&out).unwrap();
    assert_eq!(long.lines().count(), 1 + 8);
    let agg = fs::read_to_string(dir.path().join("res_agg.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 4);
    assert!(dir.path().join("res_timing.csv").exists());

    // drop the last two rows and resume
    let kept: Vec<&str> = long.lines().take(7).collect();
    fs::write(&out, kept.join("\n") + "\n").unwrap();
    let second = run();
    assert!(second.status.success());
    let resumed = fs::read_to_string(&out).unwrap();
    assert_eq!(resumed.lines().count(), 9);
    let key = |s: &str| {
        s.lines()
            .map(|l| l.split(',').take(10).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
    };
    assert_eq!(key(&resumed), key(&long));
    assert_eq!(
        fs::read_to_string(dir.path().join("res_agg.csv")).unwrap(),
        agg
    );
}
