//! End-to-end tests of the experiment runner: file schemas, determinism,
//! strict config validation and the sweep layout.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn peas_bin() -> &'static str {
    env!("CARGO_BIN_EXE_peas")
}

fn run_cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(peas_bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const QUAD_PEAS: &str = r#"
mode = "peas"

[problem]
name = "quadratic"
dimension = 8
seed = 7

[problem.parameters]
cond = 50.0

[solver]
p = 2.0
feedback = "velocity"
max_iter = 300
"#;

#[test]
fn run_writes_history_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.toml", QUAD_PEAS);
    let out = run_cli(
        &["run", config.to_str().unwrap(), "--output", "out"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let runs: Vec<_> = std::fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(runs.len(), 1, "one timestamped run directory");
    let run_dir = &runs[0];

    let history = std::fs::read_to_string(run_dir.join("history.csv")).unwrap();
    let header = history.lines().next().unwrap();
    assert_eq!(header, "k,lambda,tau,value_gap,grad_norm,prox_residual");

    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mode"], "peas");
    assert!(report["verdicts"].as_array().unwrap().len() >= 4);
    let schema: Value = serde_json::from_str(include_str!("../schema/report.schema.json")).unwrap();
    let mut errors = Vec::new();
    validate(&schema, &report, "$", &mut errors);
    assert!(errors.is_empty(), "schema violations: {errors:?}");
}

#[test]
fn inertial_history_has_averaged_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "exp.toml",
        &QUAD_PEAS
            .replace("mode = \"peas\"", "mode = \"peas-inertial\"")
            .replace("feedback = \"velocity\"\n", ""),
    );
    let out = run_cli(
        &["run", config.to_str().unwrap(), "--output", "out", "--force"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let history = std::fs::read_to_string(dir.path().join("out/history.csv")).unwrap();
    assert_eq!(
        history.lines().next().unwrap(),
        "k,lambda,tau,value_gap,grad_norm,prox_residual,x_value_gap,x_grad_norm"
    );
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.toml", QUAD_PEAS);
    for out_dir in ["a", "b"] {
        let out = run_cli(
            &["run", config.to_str().unwrap(), "--output", out_dir, "--force"],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a/history.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/history.csv")).unwrap();
    assert_eq!(a, b, "identical configs must reproduce byte-identical CSV");
    let ra = std::fs::read(dir.path().join("a/report.json")).unwrap();
    let rb = std::fs::read(dir.path().join("b/report.json")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn runs_never_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.toml", QUAD_PEAS);
    for _ in 0..2 {
        let out = run_cli(
            &["run", config.to_str().unwrap(), "--output", "out"],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let runs = std::fs::read_dir(dir.path().join("out")).unwrap().count();
    assert_eq!(runs, 2, "each run gets its own timestamped directory");
}

#[test]
fn gradient_feedback_with_small_q_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "exp.toml",
        r#"
mode = "ode-closed-loop"

[problem]
name = "quadratic"
dimension = 4
seed = 1

[dynamics]
p = 2.0
q = 0.4
gamma = 2.0
feedback = "gradient"
t_end = 10.0
"#,
    );
    let out = run_cli(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("q >= 1/2"), "stderr: {stderr}");
}

#[test]
fn unknown_keys_are_rejected_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "exp.toml",
        &QUAD_PEAS.replace("max_iter = 300", "max_iter = 300\nmax_itre = 4"),
    );
    let out = run_cli(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line"), "stderr: {stderr}");
}

#[test]
fn missing_solver_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "exp.toml",
        r#"
mode = "peas"

[problem]
name = "quadratic"
dimension = 4
seed = 1
"#,
    );
    let out = run_cli(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_produces_grid_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sweep.toml",
        &format!(
            "{QUAD_PEAS}
[sweep]
p = [1.0, 2.0]
feedback = [\"velocity\", \"gradient\"]
"
        ),
    );
    let out = run_cli(
        &[
            "sweep",
            config.to_str().unwrap(),
            "--output",
            "grid",
            "--force",
            "--jobs",
            "2",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("grid/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "p,q,gamma,feedback,fitted_exponent,target,passed");
    assert_eq!(lines.len(), 5, "header + 4 cells: {summary}");
    for cell in [
        "p1_q1_velocity_seed7",
        "p1_q1_gradient_seed7",
        "p2_q1_velocity_seed7",
        "p2_q1_gradient_seed7",
    ] {
        assert!(
            dir.path().join("grid").join(cell).join("history.csv").exists(),
            "missing cell dir {cell}"
        );
    }
}

#[test]
fn sweep_cardinality_matches_the_grid() {
    // p x feedback grid: 3 x 2 cells, one summary row each.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sweep.toml",
        &format!(
            "{QUAD_PEAS}
[sweep]
p = [1.0, 2.0, 4.0]
feedback = [\"velocity\", \"gradient\"]
"
        ),
    );
    let out = run_cli(
        &["sweep", config.to_str().unwrap(), "--output", "g", "--force"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("g/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 7, "header + 6 rows: {summary}");
}

#[test]
fn continuous_sweep_reports_the_q1_target() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sweep.toml",
        r#"
mode = "ode-closed-loop"

[problem]
name = "quadratic"
dimension = 4
seed = 7

[problem.parameters]
cond = 50.0

[dynamics]
p = 2.0
q = 1.0
gamma = 2.0
feedback = "velocity"
t_end = 10.0

[sweep]
p = [1.0, 2.0]
"#,
    );
    let out = run_cli(
        &["sweep", config.to_str().unwrap(), "--output", "g", "--force"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("g/summary.csv")).unwrap();
    let p1_row = summary
        .lines()
        .find(|l| l.starts_with("1,"))
        .expect("p = 1 row present");
    // velocity target 1 + q − 1/p = 1.0 for p = 1, q = 1
    let target: f64 = p1_row.split(',').nth(5).unwrap().parse().unwrap();
    assert!((target - 1.0).abs() < 1e-12, "row: {p1_row}");
}

#[test]
fn verify_runs_the_acceptance_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["verify"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout: {stdout}");
    assert!(stdout.contains("15/15 criteria passed"), "stdout: {stdout}");
    assert_eq!(stdout.matches("[PASS]").count(), 15);
}

#[test]
fn seed_flag_overrides_problem_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.toml", QUAD_PEAS);
    for (out_dir, seed) in [("s7", "7"), ("s8", "8")] {
        let out = run_cli(
            &[
                "run",
                config.to_str().unwrap(),
                "--output",
                out_dir,
                "--force",
                "--seed",
                seed,
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("s7/history.csv")).unwrap();
    let b = std::fs::read(dir.path().join("s8/history.csv")).unwrap();
    assert_ne!(a, b, "different seeds must give different runs");
}

// Minimal JSON-schema checker covering the subset used by
// schema/report.schema.json: type(s), required, properties,
// additionalProperties, items and string enums.
fn validate(schema: &Value, value: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(types) = schema.get("type") {
        let allowed: Vec<&str> = match types {
            Value::String(s) => vec![s.as_str()],
            Value::Array(list) => list.iter().filter_map(|v| v.as_str()).collect(),
            _ => vec![],
        };
        let actual = match value {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Number(n) => {
                if n.is_i64() || n.is_u64() {
                    "integer"
                } else {
                    "number"
                }
            }
            Value::String(_) => "string",
            Value::Array(_) => "array",
            Value::Object(_) => "object",
        };
        let ok = allowed
            .iter()
            .any(|t| *t == actual || (*t == "number" && actual == "integer"));
        if !ok {
            errors.push(format!("{path}: expected {allowed:?}, got {actual}"));
            return;
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            errors.push(format!("{path}: {value} not in enum"));
        }
    }
    if let Value::Object(map) = value {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !map.contains_key(key) {
                    errors.push(format!("{path}: missing required key '{key}'"));
                }
            }
        }
        let properties = schema.get("properties").and_then(Value::as_object);
        for (key, item) in map {
            let child_path = format!("{path}.{key}");
            if let Some(child_schema) = properties.and_then(|p| p.get(key)) {
                validate(child_schema, item, &child_path, errors);
            } else {
                match schema.get("additionalProperties") {
                    Some(Value::Bool(false)) => {
                        errors.push(format!("{path}: unexpected key '{key}'"))
                    }
                    Some(extra_schema) if extra_schema.is_object() => {
                        validate(extra_schema, item, &child_path, errors)
                    }
                    _ => {}
                }
            }
        }
    }
    if let (Value::Array(items), Some(item_schema)) = (value, schema.get("items")) {
        for (i, item) in items.iter().enumerate() {
            validate(item_schema, item, &format!("{path}[{i}]"), errors);
        }
    }
}
