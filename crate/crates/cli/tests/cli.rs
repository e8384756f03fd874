use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polycycle_core::io::field_to_json;
use polycycle_core::secant::cubic_rotation_field;
use polycycle_core::PolyField3;
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polycycle")).args(args).output().expect("run polycycle")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_field(dir: &TempDir, name: &str, f: &PolyField3) -> PathBuf {
    let p = dir.path().join(format!("{name}.json"));
    std::fs::write(&p, field_to_json(f)).unwrap();
    p
}

fn diagonal(dir: &TempDir) -> PathBuf {
    write_field(dir, "diagonal", &PolyField3::linear_i([[1, 0, 0], [0, -1, 0], [0, 0, -2]]))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn assert_schema_valid(report: &Value) {
    let schema: Value =
        serde_json::from_str(include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/report.schema.json")))
            .unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    if let Err(errors) = compiled.validate(report) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("report violates schema:\n{}", msgs.join("\n"));
    };
}

#[test]
fn analyze_writes_a_schema_valid_report_and_exports() {
    let dir = TempDir::new().unwrap();
    let field = diagonal(&dir);
    let (out, dot, csv, poly) = ["r.json", "g.dot", "s.csv", "p.csv"].map(|n| dir.path().join(n)).into();
    let o = run(&[
        "analyze",
        "--field",
        s(&field),
        "--seed",
        "0,1,1",
        "--out",
        s(&out),
        "--dot",
        s(&dot),
        "--csv",
        s(&csv),
        "--polylines",
        s(&poly),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_schema_valid(&r);
    assert_eq!(r["equilibria"].as_array().unwrap().len(), 6);
    assert_eq!(r["ms_verdict"]["ok"], Value::Bool(true));
    assert_eq!(r["seeds"][0]["comparison"]["verdict"], "match");
    assert!(r["timestamp"].is_u64());
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);

    let dot = std::fs::read_to_string(&dot).unwrap();
    assert!(dot.starts_with("digraph separatrices {") && dot.trim_end().ends_with('}'));
    let csv = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv.lines().next(), Some("t,sx,sy,sz,r"));
    assert!(csv.lines().count() > 1000);
    assert!(std::fs::metadata(&poly).unwrap().len() > 0);
}

#[test]
fn other_fixtures_produce_schema_valid_reports() {
    let dir = TempDir::new().unwrap();
    let equator = write_field(&dir, "equator", &PolyField3::linear_i([[-1, -1, 0], [1, -1, 0], [0, 0, -3]]));
    let out = dir.path().join("eq.json");
    let o = run(&["analyze", "--field", s(&equator), "--seed", "1,0,0.5", "--out", s(&out), "--no-timestamp"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_schema_valid(&r);
    assert!(r.get("timestamp").is_none() || r["timestamp"].is_null());
    assert_eq!(r["prediction"]["prediction"]["kind"], "PeriodicOrbit");

    // Unreduced runs still report.
    let cubic = write_field(&dir, "cubic", &cubic_rotation_field());
    let out = dir.path().join("cubic.json");
    let o = run(&["analyze", "--field", s(&cubic), "--depth-cap", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 3);
    let r = read_json(&out);
    assert_schema_valid(&r);
    assert_eq!(r["reduction_reached"], Value::Bool(false));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["analyze", "--field", s(&missing)])), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"components": [[[[1, 0], 1, 0, 0]], [], []]}"#).unwrap();
    let o = run(&["analyze", "--field", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let radial = write_field(&dir, "radial", &PolyField3::linear_i([[1, 0, 0], [0, 1, 0], [0, 0, 1]]));
    assert_eq!(code(&run(&["blowup", "--field", s(&radial)])), 2);

    let zero = write_field(&dir, "zero", &PolyField3::zero());
    assert_eq!(code(&run(&["analyze", "--field", s(&zero)])), 2);

    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "depth_cap = 0\n").unwrap();
    assert_eq!(code(&run(&["analyze", "--field", s(&diagonal(&dir)), "--config", s(&cfg)])), 2);

    let cubic = write_field(&dir, "cubic", &cubic_rotation_field());
    assert_eq!(code(&run(&["blowup", "--field", s(&cubic), "--depth-cap", "1"])), 3);
    assert_eq!(code(&run(&["graph", "--field", s(&cubic), "--depth-cap", "1"])), 3);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = TempDir::new().unwrap();
    let field = diagonal(&dir);
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seeds = [[0.0, 1.0, 1.0]]\n[secant]\nt_max = 50.0\n").unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(code(&run(&["analyze", "--field", s(&field), "--config", s(&cfg), "--out", s(&a)])), 0);
    assert_eq!(code(&run(&["analyze", "--field", s(&field), "--config", s(&cfg), "--t-max", "60", "--out", s(&b)])), 0);
    let (a, b) = (read_json(&a), read_json(&b));
    assert_eq!(a["seeds"].as_array().unwrap().len(), 1);
    assert_ne!(a["config_hash"], b["config_hash"]);
}

#[test]
fn help_prints_defaults() {
    let o = run(&["analyze", "--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for needle in [
        "--depth-cap",
        "[default: 4]",
        "[default: 1e-4]",
        "[default: 1e-10]",
        "Default configuration (TOML)",
        "[secant]",
    ] {
        assert!(text.contains(needle), "help lacks {needle:?}:\n{text}");
    }
    let o = run(&["trace", "--help"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[default: 10000]"));
}

#[test]
fn subcommands_chain_through_files() {
    let dir = TempDir::new().unwrap();
    let field = diagonal(&dir);
    let atlas = dir.path().join("atlas.json");
    assert_eq!(code(&run(&["blowup", "--field", s(&field), "--out", s(&atlas)])), 0);
    assert_eq!(read_json(&atlas)["equilibria"].as_array().unwrap().len(), 6);

    let (d1, d2, gj) = (dir.path().join("1.dot"), dir.path().join("2.dot"), dir.path().join("g.json"));
    assert_eq!(code(&run(&["graph", "--atlas", s(&atlas), "--dot", s(&d1), "--json", s(&gj)])), 0);
    assert_eq!(code(&run(&["graph", "--field", s(&field), "--dot", s(&d2)])), 0);
    assert_eq!(std::fs::read_to_string(&d1).unwrap(), std::fs::read_to_string(&d2).unwrap());

    let w = run(&["weights", "--graph", s(&gj)]);
    assert_eq!(code(&w), 0);
    let rep: Value = serde_json::from_slice(&w.stdout).unwrap();
    assert!(rep["connections"].as_array().unwrap().is_empty());
}

#[test]
fn weights_fixture_detects_connection_until_shifted() {
    let count = |shift: &str| {
        let o = run(&["weights", "--fixture", "--shift", shift]);
        assert_eq!(code(&o), 0);
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v["connections"].as_array().unwrap().len()
    };
    assert_eq!(count("0"), 1);
    assert_eq!(count("1/100"), 0);
    assert_eq!(code(&run(&["weights", "--fixture", "--shift", "abc"])), 2);
}

#[test]
fn trace_reports_json_and_csv() {
    let dir = TempDir::new().unwrap();
    let field = write_field(&dir, "pole", &PolyField3::linear_i([[-3, 0, 0], [0, -3, 0], [0, 0, -1]]));
    let csv = dir.path().join("t.csv");
    let o =
        run(&["trace", "--field", s(&field), "--seed", "0.5,0,1", "--t-max", "100", "--tol", "1e-9", "--csv", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["accumulation"]["class"], "point");
    let rows: Vec<Vec<f64>> = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(rows
        .iter()
        .all(|r| r.len() == 5 && ((r[1] * r[1] + r[2] * r[2] + r[3] * r[3]).sqrt() - 1.0).abs() < 1e-12));
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));

    // An orbit leaving the origin is a result, not an input error.
    let diag = diagonal(&dir);
    let o = run(&["trace", "--field", s(&diag), "--seed", "1,1,1"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["error"].as_str().unwrap().contains("not attracting"));
}

#[test]
fn empty_graph_dot_is_well_formed() {
    let dir = TempDir::new().unwrap();
    // Attracting node: six attracting divisor points and no separatrices.
    let field = write_field(&dir, "sink", &PolyField3::linear_i([[-1, 0, 0], [0, -2, 0], [0, 0, -3]]));
    let o = run(&["graph", "--field", s(&field)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dot = String::from_utf8_lossy(&o.stdout);
    assert!(dot.starts_with("digraph separatrices {"));
    assert!(dot.trim_end().ends_with('}'));
}
