use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qrouter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrouter")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn run_writes_report_and_counts() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sup.json");
    let o = qrouter(&["run", "--experiment", "router-superposition", "--seed", "4", "--no-timestamps", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out);
    assert_eq!(report["spec"]["name"], "router-superposition");
    assert_eq!(report["spec"]["shots"], 8192);
    assert_eq!(report["spec"]["tomography"], "full");
    assert_eq!(report["counts_file"], "sup.counts.json");
    assert!(report["fidelity"].as_f64().unwrap() >= 0.98);
    assert!(report["negativity"].as_f64().unwrap() > 0.1);
    assert!(report.get("timestamps").is_none());
    assert_eq!(report["ideal_state"].as_array().unwrap().len(), 8);

    let counts = read_json(&dir.path().join("sup.counts.json"));
    assert_eq!(counts["shots"], 8192);
    assert_eq!(counts["seed"], 4);
    assert_eq!(counts["settings"].as_object().unwrap().len(), 27);
    let xyz: u64 = counts["settings"]["XYZ"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(xyz, 8192);
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = qrouter(&[
            "run", "--experiment", "router-control1", "--noise", "ibmqx4", "--seed", "17", "--no-timestamps", "--out", path_str(p),
        ]);
        assert!(o.status.success());
    }
    let strip = |p: &Path| std::fs::read_to_string(p).unwrap().replace("a.counts.json", "").replace("b.counts.json", "");
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(
        std::fs::read(dir.path().join("a.counts.json")).unwrap(),
        std::fs::read(dir.path().join("b.counts.json")).unwrap()
    );
}

#[test]
fn timestamps_present_by_default() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    assert!(qrouter(&["run", "--experiment", "router-control0", "--tomography", "none", "--out", path_str(&out)]).status.success());
    assert!(read_json(&out)["timestamps"]["started_unix_ms"].as_u64().is_some());
}

#[test]
fn routed_control0_and_verify() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c0.json");
    let o = qrouter(&["run", "--experiment", "router-control0", "--seed", "1", "--out", path_str(&out)]);
    assert!(o.status.success());
    let report = read_json(&out);
    assert_eq!(report["spec"]["tomography"], "routed");
    assert_eq!(report["reconstructed"]["n_qubits"], 1);
    assert!(report["fidelity"].as_f64().unwrap() >= 0.99);

    let v = qrouter(&["verify", "--report", path_str(&out)]);
    let stdout = String::from_utf8_lossy(&v.stdout);
    assert!(v.status.success(), "{stdout}");
    assert!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count() >= 6);
}

#[test]
fn control1_ideal_state_matches_product() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c1.json");
    assert!(qrouter(&["run", "--experiment", "router-control1", "--tomography", "none", "--out", path_str(&out)]).status.success());
    let amps: Vec<(f64, f64)> = read_json(&out)["ideal_state"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
        .collect();
    // |1⟩|+⟩|Ψs⟩ with Ψs = cos(π/8)|0⟩ + sin(π/8)|1⟩, up to a global phase.
    let (c, s) = ((std::f64::consts::PI / 8.0).cos(), (std::f64::consts::PI / 8.0).sin());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let expected = [0.0, 0.0, 0.0, 0.0, h * c, h * s, h * c, h * s];
    let (pr, pi) = (amps[4].0 / (h * c), amps[4].1 / (h * c));
    for (k, &(re, im)) in amps.iter().enumerate() {
        let (er, ei) = (expected[k] * pr, expected[k] * pi);
        assert!((re - er).abs() < 1e-10 && (im - ei).abs() < 1e-10, "amplitude {k}");
    }
}

#[test]
fn corrupted_report_fails_verify() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    assert!(qrouter(&["run", "--experiment", "router-control0", "--tomography", "none", "--out", path_str(&out)]).status.success());
    let mut v = read_json(&out);
    v["reconstructed"]["entries"][1][1][0] = serde_json::json!(0.3);
    std::fs::write(&out, v.to_string()).unwrap();
    let o = qrouter(&["verify", "--report", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL] unit trace"));
}

#[test]
fn emit_figure_csv() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("r.json");
    let csv = dir.path().join("imag.csv");
    assert!(qrouter(&["run", "--experiment", "router-superposition", "--tomography", "none", "--out", path_str(&report)])
        .status
        .success());
    let o = qrouter(&["emit-figure", "--report", path_str(&report), "--part", "imag", "--out", path_str(&csv)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<String>> = text.lines().map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0][1], "|000⟩");
    assert_eq!(rows[8][0], "|111⟩");
    let entries = &read_json(&report)["reconstructed"]["entries"];
    for i in 0..8 {
        for j in 0..8 {
            let cell: f64 = rows[i + 1][j + 1].parse().unwrap();
            assert!((cell - entries[i][j][1].as_f64().unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn emit_figure_single_qubit_real_part() {
    let dir = TempDir::new().unwrap();
    let qasm = dir.path().join("zero.qasm");
    std::fs::write(&qasm, "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\nbarrier q[0];\n").unwrap();
    let report = dir.path().join("r.json");
    let csv = dir.path().join("re.csv");
    let o = qrouter(&["run", "--qasm", path_str(&qasm), "--tomography", "none", "--out", path_str(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(qrouter(&["emit-figure", "--report", path_str(&report), "--part", "real", "--out", path_str(&csv)]).status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), ",|0⟩,|1⟩\n|0⟩,1,0\n|1⟩,0,0\n");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let out_s = path_str(&out);

    let o = qrouter(&["run", "--experiment", "router-superposition", "--tomography", "routed", "--out", out_s]);
    assert_eq!(o.status.code(), Some(1));
    let o = qrouter(&["run", "--experiment", "router-bogus", "--out", out_s]);
    assert_eq!(o.status.code(), Some(1));
    let o = qrouter(&["run", "--out", out_s]);
    assert_eq!(o.status.code(), Some(1));

    let o = qrouter(&["run", "--qasm", "/nonexistent.qasm", "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.qasm");
    std::fs::write(&bad, "OPENQASM 2.0;\nqreg q[2];\nfoo q[0];\n").unwrap();
    let o = qrouter(&["run", "--qasm", path_str(&bad), "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("3:1"));
    let o = qrouter(&["verify", "--report", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(2));

    let wide = dir.path().join("wide.qasm");
    std::fs::write(&wide, "OPENQASM 2.0;\nqreg q[5];\ncx q[0], q[4];\n").unwrap();
    let o = qrouter(&["run", "--qasm", path_str(&wide), "--transpile", "ibmqx4", "--tomography", "none", "--out", out_s]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn custom_qasm_with_device_files() {
    let dir = TempDir::new().unwrap();
    let qasm = dir.path().join("bell.qasm");
    std::fs::write(&qasm, "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\ncreg c[2];\nh q[0];\ncx q[0], q[1];\nmeasure q[0] -> c[0];\n").unwrap();
    let device = dir.path().join("device.json");
    std::fs::write(
        &device,
        r#"{ "qubits": [{ "t1_us": 50, "t2_us": 60 }, { "t1_us": 50, "t2_us": 60 }], "p1": 0.001, "p2": 0.01, "p_readout": 0.0 }"#,
    )
    .unwrap();
    let map = dir.path().join("map.json");
    std::fs::write(&map, r#"{ "n_qubits": 2, "edges": [[1, 0]] }"#).unwrap();
    let out = dir.path().join("r.json");
    let o = qrouter(&[
        "run", "--qasm", path_str(&qasm), "--noise", path_str(&device), "--transpile", path_str(&map), "--layout", "0,1",
        "--shots", "2048", "--seed", "3", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out);
    assert_eq!(report["spec"]["name"], "custom");
    let f = report["fidelity"].as_f64().unwrap();
    assert!(f > 0.9 && f < 1.0, "{f}");
    assert!(report["negativity"].as_f64().unwrap() > 0.3);
}

#[test]
fn settings_per_observable_mode() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = qrouter(&[
        "run", "--experiment", "router-superposition", "--settings-per-observable", "--shots", "1024", "--out", path_str(&out),
    ]);
    assert!(o.status.success());
    let counts = read_json(&dir.path().join("r.counts.json"));
    let settings = counts["settings"].as_object().unwrap();
    assert_eq!(settings.len(), 63);
    assert!(settings.contains_key("IIX") && settings.contains_key("ZZZ"));
}
