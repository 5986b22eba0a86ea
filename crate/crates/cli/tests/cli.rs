use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scn(dir: &Path, threads: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scn"));
    cmd.current_dir(dir).args(args).env_remove("SCN_THREADS");
    if let Some(t) = threads {
        cmd.env("SCN_THREADS", t);
    }
    cmd.output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = scn(dir, None, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn failure(dir: &Path, args: &[&str]) -> (i32, Value) {
    let out = scn(dir, None, args);
    assert!(out.stdout.is_empty());
    (out.status.code().unwrap(), serde_json::from_slice(&out.stderr).unwrap())
}

const INPUTS: [&str; 4] = ["--tracks", "g/tracks.csv", "--map", "g/map.json"];

fn with_inputs<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(INPUTS).collect()
}

#[test]
fn slice_writes_one_segment_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--script", "three-phase", "--seed", "2", "--out-dir", "g"]);
    let summary = ok(d, &with_inputs(&["slice", "--out", "atoms.jsonl"]));
    let text = std::fs::read_to_string(d.join("atoms.jsonl")).unwrap();
    assert_eq!(text.lines().count() as u64, summary["segments"].as_u64().unwrap());
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["ego_id"].is_string() && v["itype"].is_string());
    }
    let ego = ok(d, &with_inputs(&["slice", "--ego", "1", "--out", "ego.jsonl"]));
    assert_eq!(ego["segments"], 3);
}

#[test]
fn dist_prints_the_contract_fields() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--script", "merge", "--seed", "1", "--out-dir", "g"]);
    ok(d, &with_inputs(&["slice", "--out", "atoms.jsonl"]));
    let v = ok(d, &with_inputs(&["dist", "--atoms", "atoms.jsonl", "--a", "0", "--b", "1"]));
    assert_eq!(v["a_id"], 0);
    assert_eq!(v["b_id"], 1);
    assert!(v["normalized"].as_f64().unwrap() >= 0.0);
    assert!(v["M"].as_u64().unwrap() > 0 && v["N"].as_u64().unwrap() > 0);
    assert_eq!(v["W"], 25);
    let same = ok(d, &with_inputs(&["dist", "--atoms", "atoms.jsonl", "--a", "1", "--b", "1"]));
    assert_eq!(same["normalized"], 0.0);
}

#[test]
fn stats_and_export_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--script", "three-phase", "--seed", "3", "--out-dir", "g"]);
    ok(d, &with_inputs(&["slice", "--ego", "1", "--out", "atoms.jsonl"]));
    let stats = ok(d, &["stats", "--atoms", "atoms.jsonl"]);
    assert_eq!(stats["segments"], 3);
    ok(d, &["export", "--atoms", "atoms.jsonl", "--out-dir", "plots"]);
    let rows = |f: &str| std::fs::read_to_string(d.join("plots").join(f)).unwrap().lines().count() - 1;
    assert_eq!(rows("segments.csv"), 3);
    assert_eq!(rows("scatter.csv"), 0);
}

#[test]
fn merge_pipeline_scatter_matches_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--script", "merge", "--seed", "5", "--out-dir", "g"]);
    ok(d, &with_inputs(&["slice", "--out", "atoms.jsonl"]));
    ok(d, &with_inputs(&["matrix", "--atoms", "atoms.jsonl", "--type", "static_conflict_line", "--out", "d.csv"]));
    let summary = ok(d, &with_inputs(&["label", "--atoms", "atoms.jsonl", "--matrix", "d.csv", "--out", "r.json"]));
    ok(d, &["export", "--report", "r.json", "--atoms", "atoms.jsonl", "--out-dir", "plots"]);
    let scatter = std::fs::read_to_string(d.join("plots/scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count() as u64 - 1, summary["scenarios"].as_u64().unwrap());
}

#[test]
fn labeling_pipeline_recovers_planted_outliers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--script", "labeling", "--seed", "3", "--out-dir", "g"]);
    ok(d, &with_inputs(&["slice", "--out", "all.jsonl"]));
    let truth: Value = serde_json::from_str(&std::fs::read_to_string(d.join("g/truth.json")).unwrap()).unwrap();
    let scripted: Vec<&str> = truth["counts"].as_array().unwrap().iter().map(|c| c["ego"].as_str().unwrap()).collect();
    // Keep the scripted egos only, as the ground truth describes them.
    let kept: Vec<String> = std::fs::read_to_string(d.join("all.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            scripted.contains(&v["ego_id"].as_str().unwrap())
        })
        .map(str::to_owned)
        .collect();
    std::fs::write(d.join("atoms.jsonl"), kept.join("\n") + "\n").unwrap();
    ok(d, &with_inputs(&["matrix", "--atoms", "atoms.jsonl", "--type", "dynamic_conflict_line", "--out", "d.csv"]));
    ok(d, &with_inputs(&["label", "--atoms", "atoms.jsonl", "--matrix", "d.csv", "--out", "r.json", "--coords", "c.csv"]));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 60);
    let atoms: Vec<Value> = kept.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    let ego_of = |id: &Value| atoms.iter().find(|a| &a["id"] == id).unwrap()["ego_id"].as_str().unwrap().to_owned();
    let mut noise = 0;
    for p in truth["planted"].as_array().unwrap() {
        let e = entries.iter().find(|e| ego_of(&e["id"]) == p["ego"].as_str().unwrap()).unwrap();
        noise += (e["cluster"] == "noise") as usize;
        if p["kind"] == "right_of_way" {
            let f = &e["flags"];
            assert_eq!((&f["graph_dtw_extreme"], &f["ttc_extreme"], &f["vector_dtw_extreme"]), (&Value::Bool(true), &Value::Bool(false), &Value::Bool(false)));
        }
    }
    assert!(noise >= 8, "{noise} plants are noise");
    let venn = ok(d, &["venn", "--report", "r.json"]);
    assert!(venn["g_only"].as_u64().unwrap() >= 1);
    assert_eq!(std::fs::read_to_string(d.join("c.csv")).unwrap().lines().count(), 61);
}

fn pipeline(d: &Path, threads: &str) -> Vec<Vec<u8>> {
    let run = |args: Vec<&str>| {
        let out = scn(d, Some(threads), &args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let mut outputs = vec![
        run(with_inputs(&["slice", "--out", "atoms.jsonl"])),
        run(with_inputs(&["matrix", "--atoms", "atoms.jsonl", "--type", "static_conflict_line", "--out", "d.csv"])),
        run(with_inputs(&["label", "--atoms", "atoms.jsonl", "--type", "static_conflict_line", "--out", "r.json", "--coords", "c.csv"])),
        run(vec!["export", "--report", "r.json", "--atoms", "atoms.jsonl", "--out-dir", "plots"]),
    ];
    let mut files: Vec<PathBuf> = ["atoms.jsonl", "d.csv", "r.json", "c.csv"].iter().map(|f| d.join(f)).collect();
    files.extend(["interactive_histogram.csv", "duration_histogram.csv", "segments.csv", "filtered.csv", "scatter.csv"].iter().map(|f| d.join("plots").join(f)));
    outputs.extend(files.iter().map(|f| std::fs::read(f).unwrap()));
    outputs
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--script", "merge", "--seed", "2", "--out-dir", "g"]);
    let one = pipeline(d, "1");
    let again = pipeline(d, "1");
    let three = pipeline(d, "3");
    assert!(one == again, "repeat run differs");
    assert!(one == three, "thread count changed an output");
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = scn(d, None, &["--print-config"]);
    assert!(out.status.success());
    let cfg: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["ingest", "slice", "metric", "dtw", "label", "paths", "threads"] {
        assert!(cfg.get(key).is_some(), "{key}");
    }
    std::fs::write(d.join("c.json"), &out.stdout).unwrap();
    let again = scn(d, None, &["--config", "c.json", "--print-config"]);
    assert_eq!(again.stdout, out.stdout);
    std::fs::write(d.join("p.json"), r#"{"metric": {"depth": 2}}"#).unwrap();
    assert_eq!(ok(d, &["--config", "p.json", "--print-config"])["metric"]["depth"], 2);
}

#[test]
fn errors_are_json_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, err) = failure(d, &["bogus"]);
    assert_eq!((code, err["error"].as_str()), (2, Some("usage")));
    let (code, _) = failure(d, &[]);
    assert_eq!(code, 2);
    std::fs::write(d.join("bad.json"), r#"{"metric": {"depht": 2}}"#).unwrap();
    let (code, err) = failure(d, &["--config", "bad.json", "--print-config"]);
    assert_eq!(code, 2);
    assert!(err["message"].as_str().unwrap().contains("depht"));
    let (code, err) = failure(d, &["slice", "--tracks", "missing.csv", "--map", "missing.json", "--out", "a.jsonl"]);
    assert_eq!((code, err["error"].as_str()), (1, Some("ingest")));
    let (code, _) = failure(d, &["slice", "--tracks", "t.csv", "--map", "m.json", "--out", "t.csv"]);
    assert_eq!(code, 2);

    ok(d, &["gen", "--script", "following", "--seed", "1", "--out-dir", "g"]);
    ok(d, &with_inputs(&["slice", "--out", "atoms.jsonl"]));
    let (code, err) = failure(d, &with_inputs(&["dist", "--atoms", "atoms.jsonl", "--a", "0", "--b", "99"]));
    assert_eq!((code, err["error"].as_str()), (1, Some("input")));
    let (code, _) = failure(d, &with_inputs(&["matrix", "--atoms", "atoms.jsonl", "--type", "sideways", "--out", "d.csv"]));
    assert_eq!(code, 2);
    let (code, err) = failure(d, &with_inputs(&["matrix", "--atoms", "atoms.jsonl", "--type", "heading_line", "--out", "d.csv"]));
    assert_eq!((code, err["error"].as_str()), (1, Some("labeling")));
    let bad_threads = scn(d, Some("many"), &["stats", "--atoms", "atoms.jsonl"]);
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn ingest_resamples_raw_tracks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--script", "following", "--seed", "4", "--out-dir", "g"]);
    // Keep every second frame and declare the doubled source period.
    let text = std::fs::read_to_string(d.join("g/tracks.csv")).unwrap();
    let mut lines = text.lines();
    let mut raw = vec![lines.next().unwrap().to_owned()];
    raw.extend(lines.filter(|l| l.split(',').next().unwrap().parse::<i64>().unwrap() % 2 == 0).map(|l| {
        let (frame, rest) = l.split_once(',').unwrap();
        format!("{},{rest}", frame.parse::<i64>().unwrap() / 2)
    }));
    std::fs::write(d.join("raw.csv"), raw.join("\n") + "\n").unwrap();
    std::fs::write(d.join("c.json"), r#"{"ingest": {"source_dt": 0.08}}"#).unwrap();
    let v = ok(d, &["--config", "c.json", "ingest", "--tracks", "raw.csv", "--map", "g/map.json", "--out", "t.csv", "--report", "v.json"]);
    assert_eq!(v["vehicles"], 2);
    let resampled = std::fs::read_to_string(d.join("t.csv")).unwrap().lines().count();
    assert!((resampled as i64 - text.lines().count() as i64).abs() <= 4, "{resampled} vs {}", text.lines().count());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(d.join("v.json")).unwrap()).unwrap();
    assert!(report["findings"].is_array());
    let sliced = ok(d, &["slice", "--tracks", "t.csv", "--map", "g/map.json", "--out", "atoms.jsonl"]);
    assert!(sliced["segments"].as_u64().unwrap() >= 2);
}
