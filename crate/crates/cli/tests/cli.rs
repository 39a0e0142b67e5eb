use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

fn qbe(args: &[&str]) -> Output {
    qbe_env(args, &[])
}

fn qbe_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qbe"));
    cmd.args(args);
    for var in ballistic_cli::config::ENV_VARS {
        cmd.env_remove(var);
    }
    cmd.envs(env.iter().copied());
    cmd.output().expect("qbe runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn schema() -> JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    JSONSchema::compile(&schema).expect("schema compiles")
}

fn assert_valid(json: &Value) {
    let s = schema();
    if let Err(errors) = s.validate(json) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("schema violations: {msgs:?}\n{json:#}");
    };
}

fn json_out(o: &Output) -> Value {
    let v: Value = serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)));
    assert_valid(&v);
    v
}

fn json_err(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let v: Value = serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("{e}: {text}"));
    assert_valid(&v);
    assert_eq!(v["error"]["exit_code"], code(o));
    v
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn temp_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn emitted_zero_motion_is_decided_ballistic() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("zm.qbe");
    let o = qbe(&[
        "examples",
        "emit",
        "zero_motion",
        "--output",
        file.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let o = qbe(&["decide", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_out(&o)["verdict"], "ballistic");
}

#[test]
fn every_builtin_round_trips_and_analyzes() {
    let dir = tempfile::tempdir().unwrap();
    let expected = [
        ("zero_motion", "ballistic", 0),
        ("bit_rotation", "undecided", 0),
        ("turnaround", "partially_ballistic", 0),
        ("split_path", "undecided", 0),
        ("erasure", "not_ballistic", 1),
    ];
    for (name, verdict, exit) in expected {
        let text = stdout(&qbe(&["examples", "emit", name]));
        let file = temp_file(&dir, &format!("{name}.qbe"), &text);
        let parsed = ballistic_cli::machine_file::parse_machine_file(&text).unwrap();
        assert_eq!(parsed.name(), name);

        let by_file = qbe(&["analyze", file.to_str().unwrap()]);
        let by_name = qbe(&["analyze", name]);
        assert_eq!(code(&by_file), 0);
        assert_eq!(
            stdout(&by_file),
            stdout(&by_name),
            "{name}: file and built-in disagree"
        );
        let report = json_out(&by_file);
        assert_eq!(report["ballistic"], verdict, "{name}");

        let o = qbe(&["decide", name]);
        assert_eq!(code(&o), exit, "{name}");
        assert_eq!(json_out(&o)["verdict"], verdict);
        if exit != 0 {
            assert_eq!(json_err(&o)["error"]["class"], "verdict");
        }
    }
}

#[test]
fn builtin_bases_make_the_rotation_machines_ballistic() {
    for name in ["bit_rotation", "split_path"] {
        let o = qbe(&["decide", name, "--basis", &format!("@{name}")]);
        assert_eq!(code(&o), 0);
        assert_eq!(json_out(&o)["verdict"], "ballistic", "{name}");
    }
    let o = qbe(&["decide", "turnaround", "--basis", "@split_path"]);
    assert_eq!(code(&o), 2);
    assert!(json_err(&o)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("does not have the rules"));
}

#[test]
fn basis_csv_matches_builtin_basis() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("basis.csv");
    assert_eq!(
        code(&qbe(&[
            "examples",
            "basis",
            "bit_rotation",
            "-o",
            csv.to_str().unwrap()
        ])),
        0
    );
    let from_file = qbe(&["analyze", "bit_rotation", "--basis", csv.to_str().unwrap()]);
    let builtin = qbe(&["analyze", "bit_rotation", "--basis", "@bit_rotation"]);
    let (mut a, mut b) = (json_out(&from_file), json_out(&builtin));
    assert_eq!(a["ballistic"], "ballistic");
    a["basis"] = Value::Null;
    b["basis"] = Value::Null;
    assert_eq!(a, b);
    assert_eq!(code(&qbe(&["examples", "basis", "erasure"])), 2);
}

#[test]
fn tower_counterexample_powers() {
    let o = qbe(&["counterexample", "--tower", "3"]);
    assert_eq!(code(&o), 0);
    let r = json_out(&o);
    let powers = r["powers"].as_array().unwrap();
    assert_eq!(powers.len(), 4);
    assert_eq!(r["first_failing_power"], 3);
    let third = &powers[2];
    assert!(third["initial"].as_f64().unwrap() > 0.1);
    assert!(third["final"].as_f64().unwrap() > 0.1);
    assert!(powers[3]["norm"].as_f64().unwrap() < 1e-12);
    for p in &powers[..2] {
        assert_eq!(p["partial_isometry"], true);
    }
    let o = qbe(&["counterexample", "--tower", "2", "--a", "0.6"]);
    assert_eq!(code(&o), 2);
    json_err(&o);
}

#[test]
fn open_shift_spectrum_matches_closed_form() {
    let o = qbe(&["spectrum", "shift:8", "--predict", "truncated_shift:8"]);
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["index", "energy", "predicted", "residual"]);
    assert_eq!(rows.len(), 8);
    for (m, r) in rows.iter().enumerate() {
        assert!(r[3] < 1e-10, "level {m}: residual {}", r[3]);
        let k = (m + 1) as f64 * std::f64::consts::PI / 9.0;
        assert!((r[2] - 2.0 * (1.0 - k.cos())).abs() < 1e-14);
    }
}

#[test]
fn wrong_prediction_exits_one_after_writing_the_table() {
    let o = qbe(&["spectrum", "cycle:6", "--predict", "truncated_shift:6"]);
    assert_eq!(code(&o), 1);
    assert_eq!(csv_rows(&stdout(&o)).1.len(), 6);
    assert_eq!(json_err(&o)["error"]["class"], "verdict");
    let o = qbe(&["spectrum", "cycle:6", "--predict", "cycle:5"]);
    assert_eq!(code(&o), 0);
    let o = qbe(&["spectrum", "cycle:6", "--predict", "cycle:4"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn hopping_strength_scales_the_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = temp_file(&dir, "qbe.toml", "K = 0.5\n");
    let top = |args: &[&str]| {
        let o = qbe(args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        csv_rows(&stdout(&o)).1.last().unwrap()[1]
    };
    // Cycle of 2: energies 0 and 4K.
    assert_eq!(top(&["spectrum", "cycle:2"]), 4.0);
    assert_eq!(
        top(&["spectrum", "cycle:2", "--config", cfg.to_str().unwrap()]),
        2.0
    );
    assert_eq!(
        top(&[
            "spectrum",
            "cycle:2",
            "--config",
            cfg.to_str().unwrap(),
            "--K",
            "3"
        ]),
        12.0
    );
}

#[test]
fn path_component_spectrum() {
    // Path 0 of zero_motion on 6 open sites starts on the blank tape and has 6 states.
    let o = qbe(&["spectrum", "zero_motion", "--component", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 6);
    for (m, r) in rows.iter().enumerate() {
        let k = (m + 1) as f64 * std::f64::consts::PI / 7.0;
        assert!((r[1] - 2.0 * (1.0 - k.cos())).abs() < 1e-10);
        assert!(r[3] < 1e-10);
    }
    let o = qbe(&["spectrum", "zero_motion", "--component", "100000"]);
    assert_eq!(code(&o), 2);
    // The rotated paths only exist in the rotated basis.
    let o = qbe(&["spectrum", "bit_rotation", "--component", "0"]);
    assert_eq!(code(&o), 1);
    let o = qbe(&[
        "spectrum",
        "bit_rotation",
        "--component",
        "0",
        "--basis",
        "@bit_rotation",
    ]);
    assert_eq!(code(&o), 0);
    assert!(csv_rows(&stdout(&o)).1.iter().all(|r| r[3] < 1e-10));
}

#[test]
fn evolution_stays_on_its_paths() {
    let o = qbe(&[
        "evolve",
        "zero_motion",
        "--state",
        "0:0:000000",
        "--times",
        "0:20:5",
    ]);
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header.first().unwrap(), "t");
    assert_eq!(&header[header.len() - 2..], ["leakage", "norm"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4][0], 20.0);
    for r in &rows {
        assert!(r[r.len() - 2] < 1e-12);
        assert!((r[r.len() - 1] - 1.0).abs() < 1e-12);
    }

    let o = qbe(&[
        "evolve",
        "bit_rotation",
        "--basis",
        "@bit_rotation",
        "--state",
        "0:1:000000",
        "--times",
        "0,3.5,40",
    ]);
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header.len(), 5, "the start state lies on two rotated paths");
    for r in rows {
        assert!((r[1] + r[2] - 1.0).abs() < 1e-10);
        assert!(r[3] < 1e-10);
    }
}

#[test]
fn evolution_needs_paths() {
    let o = qbe(&["evolve", "erasure", "--state", "0", "--times", "1"]);
    assert_eq!(code(&o), 1);
    json_err(&o);
    let o = qbe(&["evolve", "zero_motion", "--state", "0:0:01", "--times", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn decompositions() {
    let o = qbe(&["decompose", "shift:5"]);
    assert_eq!(code(&o), 0);
    let r = json_out(&o);
    assert_eq!(r["truncated"], serde_json::json!([[5, 5]]));
    assert_eq!(r["unitary_rank"], 0);

    let r = json_out(&qbe(&["decompose", "cycle:4"]));
    assert_eq!(r["unitary_rank"], 4);
    assert_eq!(r["unitary_paths"]["cycles"], 1);

    // U_1 is a proper contraction, so no direct sum of towers is power-partial-isometric.
    let o = qbe(&["decompose", "sum:11", "--a", "0.3"]);
    assert_eq!(code(&o), 1);
    assert!(json_err(&o)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("power 1"));

    let o = qbe(&["decompose", "tower:3"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json_err(&o)["error"]["class"], "verdict");

    let r = json_out(&qbe(&["decompose", "zero_motion"]));
    assert_eq!(r["target"], "zero_motion");
}

#[test]
fn dense_matrix_target() {
    let dir = tempfile::tempdir().unwrap();
    // A 3-cycle written densely: e_0 -> e_1 -> e_2 -> e_0.
    let m = temp_file(&dir, "c3.csv", "c0,c1,c2\n0,0,1\n1,0,0\n0,1+0i,0\n");
    let r = json_out(&qbe(&["decompose", &format!("matrix:{}", m.display())]));
    assert_eq!(r["unitary_rank"], 3);
    let bad = temp_file(&dir, "bad.csv", "c0,c1\n1,0\n");
    assert_eq!(
        code(&qbe(&["decompose", &format!("matrix:{}", bad.display())])),
        2
    );
}

#[test]
fn machine_file_errors_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let dup = temp_file(
        &dir,
        "dup.qbe",
        "machine d\nheads 1\nlattice 3 open\nrule 0 0 0 R 1 0 0 1\n\nrule 0 0 0 L 1 0 0 1\n",
    );
    let o = qbe(&["analyze", dup.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let e = json_err(&o);
    assert_eq!(e["error"]["line"], 6);
    assert!(e["error"]["message"].as_str().unwrap().contains("lines 4 and 6"));

    let syntax = temp_file(&dir, "syn.qbe", "machine d\nheads one\n");
    let e = json_err(&qbe(&["analyze", syntax.to_str().unwrap()]));
    assert_eq!(
        (e["error"]["line"].as_u64(), e["error"]["column"].as_u64()),
        (Some(2), Some(7))
    );
}

#[test]
fn exit_codes_for_usage_and_settings() {
    assert_eq!(code(&qbe(&["--help"])), 0);
    assert_eq!(code(&qbe(&["--version"])), 0);
    let o = qbe(&["spectrum"]);
    assert_eq!(code(&o), 2);
    json_err(&o);
    assert_eq!(code(&qbe(&["analyze", "no_such_machine"])), 2);
    let o = qbe_env(&["decide", "zero_motion"], &[("QBE_EPS_EIG", "-1")]);
    assert_eq!(code(&o), 2);
    json_err(&o);
    let o = qbe_env(&["decide", "zero_motion"], &[("QBE_EPS_ZERO", "1e-11")]);
    assert_eq!(code(&o), 0);
    let dir = tempfile::tempdir().unwrap();
    let cfg = temp_file(&dir, "bad.toml", "[tolerance]\neps_proj = \"x\"\n");
    assert_eq!(
        code(&qbe(&[
            "decide",
            "zero_motion",
            "--config",
            cfg.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &["analyze", "turnaround"][..],
        &["spectrum", "bit_rotation"],
        &[
            "evolve",
            "turnaround",
            "--state",
            "0:0:00000000",
            "--times",
            "0:4:3",
        ],
        &["examples", "basis", "split_path"],
    ] {
        assert_eq!(qbe(args).stdout, qbe(args).stdout, "{args:?}");
    }
}
