use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn read_config(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(bundled(name)).unwrap()).unwrap()
}

fn write_config(dir: &TempDir, name: &str, config: &Value) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn pmfix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmfix"))
        .args(args)
        .output()
        .unwrap()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = pmfix(args);
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn canonical_space_checks_out() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("space.json");
    let (code, stdout, _) = run(&[
        "check-space",
        path_str(&bundled("canonical_ultrametric.json")),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0, "{stdout}");
    let report = read_json(&out);
    assert_eq!(report["passed"], json!(true));
    assert_eq!(report["axioms"]["triples_checked"], json!(216));
}

#[test]
fn broken_triangle_is_reported_with_witness() {
    let dir = TempDir::new().unwrap();
    let config = json!({
        "space": {
            "points": ["a", "b", "c"],
            "mode": {"triangle": "tau_pointwise", "tnorm": "min"},
            "distance": [
                ["a", "b", [[0, 0.9]]],
                ["b", "c", [[0, 0.9]]],
                ["a", "c", [[0, 0.2]]]
            ]
        }
    });
    let path = write_config(&dir, "broken.json", &config);
    let out = dir.path().join("report.json");
    let (code, stdout, _) = run(&["check-space", path_str(&path), "--out", path_str(&out)]);
    assert_eq!(code, 1);
    assert!(stdout.contains("witness"));
    let report = read_json(&out);
    let violation = &report["axioms"]["violations"][0];
    assert_eq!(violation["lhs"], json!(0.2));
    assert_eq!(violation["rhs"], json!(0.9));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let malformed = dir.path().join("bad.json");
    fs::write(&malformed, "{ not json").unwrap();
    assert_eq!(run(&["check-space", path_str(&malformed)]).0, 2);
    assert_eq!(run(&["check-space", "/nonexistent/config.json"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["solve"]).0, 2);

    let mut config = read_config("canonical_ultrametric.json");
    config["solve"]["x0"] = json!("1/3");
    let path = write_config(&dir, "unknown_point.json", &config);
    let (code, _, stderr) = run(&["solve", path_str(&path)]);
    assert_eq!(code, 2);
    assert!(stderr.contains("1/3"));

    let mut config = read_config("sphere_thm43.json");
    config["solve"].as_object_mut().unwrap().remove("sphere");
    let path = write_config(&dir, "no_sphere.json", &config);
    assert_eq!(run(&["solve", path_str(&path)]).0, 2);
}

#[test]
fn contraction_checks() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("tsr.json");
    let (code, _, _) = run(&[
        "check-contraction",
        path_str(&bundled("canonical_ultrametric.json")),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    assert!(read_json(&out)["report"]["max_defect"].as_f64().unwrap() <= 0.0);

    let (code, stdout, _) = run(&[
        "check-contraction",
        path_str(&bundled("simple_counterexample.json")),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 1);
    assert!(stdout.contains("witness"));
    let witness_t = read_json(&out)["report"]["witness"]["t"].as_f64().unwrap();
    assert!(witness_t <= 0.01);

    let mut config = read_config("simple_counterexample.json");
    config["check"]["class"] = json!("b");
    let path = write_config(&dir, "b.json", &config);
    assert_eq!(run(&["check-contraction", path_str(&path)]).0, 0);
}

#[test]
fn min_k_search() {
    let (code, stdout, _) = run(&["check-contraction", path_str(&bundled("power_thm45.json"))]);
    assert_eq!(code, 0);
    assert!(stdout.contains("k = 0.5"), "{stdout}");
}

#[test]
fn canonical_solve() {
    let (code, stdout, _) = run(&["solve", path_str(&bundled("canonical_ultrametric.json"))]);
    assert_eq!(code, 0);
    assert!(stdout.contains("fixed point: 0"));
    assert!(stdout.contains("iterations: 5"));
    assert!(stdout.contains("certified: true"));
}

#[test]
fn sphere_and_power_modes() {
    let (code, stdout, _) = run(&["solve", path_str(&bundled("sphere_thm43.json"))]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("fixed point: 0"));

    let dir = TempDir::new().unwrap();
    let mut config = read_config("sphere_thm43.json");
    config["solve"]["x0"] = json!("1");
    let path = write_config(&dir, "sphere_from_one.json", &config);
    let (code, _, stderr) = run(&["solve", path_str(&path)]);
    assert_eq!(code, 1);
    assert!(
        stderr.contains("sphere hypothesis fails at u = 0.01"),
        "{stderr}"
    );

    let (code, stdout, _) = run(&["solve", path_str(&bundled("power_thm45.json"))]);
    assert_eq!(code, 0);
    assert!(stdout.contains("fixed point: 0"));
}

#[test]
fn power_mode_refuses_a_two_cycle() {
    let dir = TempDir::new().unwrap();
    let config = json!({
        "space": {
            "points": ["a", "b"],
            "mode": {"triangle": "tau_pointwise", "tnorm": "min"},
            "ultrametric_plateau": {"beta": [[0, 0.5], [0.5, 0]]}
        },
        "map": {"type": "table", "pairs": [["a", "b"], ["b", "a"]]},
        "solve": {"mode": "power", "x0": "a", "k": 0.5, "m": 2}
    });
    let path = write_config(&dir, "cycle.json", &config);
    let (code, _, stderr) = run(&["solve", path_str(&path)]);
    assert_eq!(code, 1);
    assert!(stderr.contains("refusing to certify"), "{stderr}");
}

#[test]
fn forced_runs() {
    let dir = TempDir::new().unwrap();
    let mut config = read_config("canonical_ultrametric.json");
    config["map"]["pairs"] = json!([
        ["0", "0"],
        ["1", "1"],
        ["1/2", "1/2"],
        ["1/4", "1/4"],
        ["1/8", "1/8"],
        ["1/16", "1/16"]
    ]);
    let identity = write_config(&dir, "identity.json", &config);
    assert_eq!(run(&["solve", path_str(&identity)]).0, 1);
    let (code, stdout, _) = run(&["solve", path_str(&identity), "--force"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("certified: false"));

    config["map"]["pairs"] = json!([
        ["0", "1"],
        ["1", "0"],
        ["1/2", "1/2"],
        ["1/4", "1/4"],
        ["1/8", "1/8"],
        ["1/16", "1/16"]
    ]);
    config["solve"]["x0"] = json!("0");
    let swap = write_config(&dir, "swap.json", &config);
    let (code, stdout, _) = run(&["solve", path_str(&swap), "--force"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("cycle of period 2"));
}

#[test]
fn reports_are_byte_identical_with_sorted_keys() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let code = run(&[
            "report",
            path_str(&bundled("canonical_ultrametric.json")),
            "--out",
            path_str(out),
        ])
        .0;
        assert_eq!(code, 0);
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    let top: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    assert_eq!(
        top,
        [
            "check_contraction",
            "check_space",
            "command",
            "passed",
            "solve"
        ]
    );
}

#[test]
fn csv_trace() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("trace.csv");
    let code = run(&[
        "solve",
        path_str(&bundled("sphere_thm43.json")),
        "--out",
        path_str(&out),
    ])
    .0;
    assert_eq!(code, 0);
    let mut reader = csv::Reader::from_path(&out).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "n",
            "x_n",
            "residual",
            "min_t_bound_value",
            "min_t_step_value",
            "certified"
        ]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let xs: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    assert_eq!(xs, ["1/4", "1/8", "1/16", "0"]);
    assert!(rows.iter().all(|r| &r[5] == "true"));
    assert_eq!(&rows[3][2], "0");
}

#[test]
fn json_trace_embeds_step_distances() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("trace.json");
    assert_eq!(
        run(&[
            "solve",
            path_str(&bundled("canonical_ultrametric.json")),
            "--out",
            path_str(&out)
        ])
        .0,
        0
    );
    let report = read_json(&out);
    let steps = report["trace"]["step_distance"].as_array().unwrap();
    assert_eq!(steps.len(), 6);
    assert_eq!(steps[1], json!([[0.0, 0.5]]));
    assert_eq!(
        report["trace"]["outcome"],
        json!({"status": "converged", "point": 0, "exact": true, "steps": 5})
    );
}

#[test]
fn thread_cap() {
    let path = bundled("random_ultrametric.json");
    let status = Command::new(env!("CARGO_BIN_EXE_pmfix"))
        .args(["check-space", path_str(&path)])
        .env("PMFIX_THREADS", "1")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = Command::new(env!("CARGO_BIN_EXE_pmfix"))
        .args(["check-space", path_str(&path)])
        .env("PMFIX_THREADS", "0")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn seed_override_changes_random_space() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let path = bundled("random_ultrametric.json");
    assert_eq!(
        run(&[
            "solve",
            path_str(&path),
            "--seed",
            "1",
            "--out",
            path_str(&a)
        ])
        .0,
        0
    );
    assert_eq!(
        run(&[
            "solve",
            path_str(&path),
            "--seed",
            "2",
            "--out",
            path_str(&b)
        ])
        .0,
        0
    );
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
