//! End-to-end CLI tests: exit codes, artifact formats, determinism, and
//! byte-identical golden outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isospec"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn isospec")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tests/golden")
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

// -------------------------------------------------------------------
// exit codes
// -------------------------------------------------------------------

#[test]
fn no_arguments_exits_2_with_usage() {
    let out = bin().output().expect("spawn");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn unknown_domain_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("s.csv");
    let out = run(&["spectrum", "--domain", "klein-bottle", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown domain"));
    assert!(!out_path.exists());
}

#[test]
fn robin_boundary_condition_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    std::fs::write(
        &graph,
        r#"{"edges":[{"id":0,"length":6.283185307179586,"from":0,"to":0}],"vertices":[{"id":0,"bc":"robin"}]}"#,
    )
    .unwrap();
    let out_path = dir.path().join("s.csv");
    let out = run(&[
        "spectrum",
        "--domain",
        graph.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("robin"));
}

#[test]
fn odd_family_certificate_exits_3_but_writes_the_artifact() {
    // The odd-family derivation relies on the vertex-discontinuous
    // generator; the replay is exact but validation honestly fails.
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("cert.json");
    let out = run(&[
        "saturate",
        "--domain",
        "eight",
        "--target",
        "phi_o:1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("numerical acceptance failure"));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["validation_pos"]["valid"], serde_json::Value::Bool(false));
}

#[test]
fn even_family_certificate_exits_0_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("cert.json");
    let out = run(&[
        "saturate",
        "--domain",
        "eight",
        "--target",
        "phi_e:2:1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["validation_pos"]["valid"], serde_json::Value::Bool(true));
    assert_eq!(v["validation_neg"]["valid"], serde_json::Value::Bool(true));
    assert!(v["header"]["scenario_hash"].as_str().unwrap().len() == 16);
}

// -------------------------------------------------------------------
// spectrum artifact
// -------------------------------------------------------------------

/// Parse the data rows of a spectrum CSV into (lambda, cluster) pairs.
fn parse_spectrum(text: &str) -> Vec<(f64, usize)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("index"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn eight_spectrum_has_the_exact_cluster_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("s.csv");
    let out = run(&[
        "spectrum",
        "--domain",
        "eight",
        "--modes",
        "12",
        "--nodes",
        "64",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rows = parse_spectrum(&std::fs::read_to_string(&out_path).unwrap());
    let lambdas: Vec<f64> = rows.iter().map(|r| r.0).collect();
    assert_eq!(
        lambdas,
        vec![0.0, 0.25, 1.0, 1.0, 1.0, 2.25, 4.0, 4.0, 4.0, 6.25, 9.0, 9.0]
    );
    // Cluster sizes along the list: 1, 1, 3, 1, 3, 1 (the trailing
    // λ = 9 cluster is cut at 12 modes).
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let c = rows[i].1;
        let n = rows.iter().filter(|r| r.1 == c).count();
        sizes.push(n);
        i += n;
    }
    assert_eq!(sizes, vec![1, 1, 3, 1, 3, 1, 2]);
}

#[test]
fn spectrum_header_carries_version_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("s.csv");
    run(&[
        "spectrum", "--domain", "three-branch", "--modes", "4", "--nodes", "64", "--out",
        out_path.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out_path).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("# isospec "));
    assert!(header.contains("scenario="));
    assert!(header.contains("seed=0"));
}

// -------------------------------------------------------------------
// scenario round-trips
// -------------------------------------------------------------------

#[test]
fn shipped_scenarios_round_trip_byte_identically() {
    for name in ["demo-eight.json", "demo-torus.json"] {
        let path = scenario_path(name);
        let sc = isospec_cli::scenario::parse_scenario(&path).unwrap();
        let emitted = isospec_cli::scenario::emit_scenario(&sc);
        let original = std::fs::read_to_string(&path).unwrap();
        assert_eq!(emitted, original, "{name} is not in canonical emitted form");
        // parse(emit(parse(x))) is a fixed point.
        let again: isospec_cli::scenario::Scenario = serde_json::from_str(&emitted).unwrap();
        assert_eq!(sc, again);
    }
}

#[test]
fn scenario_with_unknown_field_is_rejected_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut sc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(scenario_path("demo-torus.json")).unwrap(),
    )
    .unwrap();
    sc["surprise"] = serde_json::json!(1);
    std::fs::write(&path, serde_json::to_string_pretty(&sc).unwrap()).unwrap();
    let err = isospec_cli::scenario::parse_scenario(&path).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("bad.json:"), "{msg}");
    assert!(msg.contains("surprise"), "{msg}");
}

// -------------------------------------------------------------------
// evolve
// -------------------------------------------------------------------

#[test]
fn evolve_replays_a_schedule_and_reports_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = dir.path().join("sched.json");
    std::fs::write(
        &schedule,
        r#"{"segments":[{"Free":{"duration":0.1}},{"Pulse":{"duration":0.001,"u":[0.0,0.5,0.0]}}]}"#,
    )
    .unwrap();
    let out_path = dir.path().join("traj.csv");
    let out = run(&[
        "evolve",
        "--domain",
        "circle:6.283185307179586",
        "--schedule",
        schedule.to_str().unwrap(),
        "--psi0",
        "eta:1",
        "--target",
        "eta:1",
        "--nodes",
        "256",
        "--modes",
        "64",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let rows: Vec<&str> =
        text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("segment")).collect();
    assert_eq!(rows.len(), 3); // initial row + one per segment
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let norm: f64 = f[2].parse().unwrap();
        assert!((norm - 1.0).abs() <= 1e-9, "row {row}");
    }
}

// -------------------------------------------------------------------
// isomod
// -------------------------------------------------------------------

#[test]
fn isomod_scan_report_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = run(&[
        "isomod",
        "--family",
        "hermite",
        "--levels",
        "0..4",
        "--resolution",
        "256",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    // 5 entries → 10 pairs, all distinct Hermite levels reject.
    assert_eq!(v["reports"].as_array().unwrap().len(), 10);
    assert_eq!(v["n_shares"], serde_json::json!(0));
    assert_eq!(v["n_rejects"], serde_json::json!(10));
}

#[test]
fn sphere_scan_finds_the_conjugate_shares() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = run(&[
        "isomod",
        "--family",
        "sphere",
        "--levels",
        "2..2",
        "--tol",
        "1e-9",
        "--resolution",
        "128",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    // l = 2: pairs (m, −m) for m = 1, 2 share |Y|; all other pairs reject.
    assert_eq!(v["n_shares"], serde_json::json!(2));
}

// -------------------------------------------------------------------
// determinism + golden files
// -------------------------------------------------------------------

fn run_to_string(args: &[&str], out_path: &Path) -> String {
    let mut full: Vec<&str> = args.to_vec();
    let s = out_path.to_str().unwrap();
    full.push(s);
    let out = run(&full);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    std::fs::read_to_string(out_path).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["spectrum", "--domain", "eight", "--modes", "12", "--nodes", "64", "--out"],
        vec!["saturate", "--domain", "circle:6.283185307179586", "--target", "cos:3", "--out"],
        vec!["specfun", "--kind", "bessel-zeros:1", "--count", "6", "--out"],
        vec!["catalog", "--family", "eight", "--params", "k=1,j=2", "--grid", "64", "--out"],
    ];
    for (i, case) in cases.iter().enumerate() {
        let a = run_to_string(case, &dir.path().join(format!("a{i}")));
        let b = run_to_string(case, &dir.path().join(format!("b{i}")));
        assert_eq!(a, b, "case {case:?} not deterministic");
    }
}

#[test]
fn golden_artifacts_match() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, Vec<&str>)] = &[
        (
            "spectrum-eight-12.csv",
            vec!["spectrum", "--domain", "eight", "--modes", "12", "--nodes", "64", "--out"],
        ),
        (
            "saturate-circle-cos2.json",
            vec!["saturate", "--domain", "circle:6.283185307179586", "--target", "cos:2", "--out"],
        ),
        ("bessel-zeros-0.csv", vec!["specfun", "--kind", "bessel-zeros:0", "--count", "5", "--out"]),
    ];
    for (name, args) in cases {
        let produced = run_to_string(args, &dir.path().join(name));
        let golden = std::fs::read_to_string(golden_dir().join(name))
            .unwrap_or_else(|e| panic!("missing golden {name}: {e}"));
        assert_eq!(produced, golden, "golden mismatch for {name}");
    }
}

#[test]
fn synthesize_rejects_generator_domain_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut sc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(scenario_path("demo-torus.json")).unwrap(),
    )
    .unwrap();
    sc["generators"] = serde_json::json!("eight");
    std::fs::write(&path, serde_json::to_string_pretty(&sc).unwrap()).unwrap();
    let out = run(&["synthesize", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("does not live on domain"));
}
