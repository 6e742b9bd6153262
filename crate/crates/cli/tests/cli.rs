use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_metawave"));
    c.env("RUST_LOG", "warn");
    c
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("metawave-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in ["slab_mu18", "slab_mu19", "slab_mu20", "left_gaussian"] {
        let out = bin()
            .args(["validate", "--config"])
            .arg(scenarios().join(format!("{name}.json")))
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stdout).contains("5000 cells"));
    }
}

#[test]
fn validate_reports_typos_with_position() {
    let dir = scratch("typo");
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        "{\n  \"domain\": [0, 0, 1, 1],\n  \"n\": 4,\n  \"pairng\": \"rtn0\"\n}\n",
    )
    .unwrap();
    let out = bin()
        .args(["validate", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pairng") && err.contains("line 4"), "{err}");
}

#[test]
fn run_writes_requested_format() {
    let dir = scratch("run");
    let cfg = dir.join("tiny.json");
    std::fs::write(
        &cfg,
        r#"{"domain": [0, 0, 1, 1], "n": 4, "pairing": "rtn0", "t_final": 0.1, "dt": 0.05,
            "boundary": [{"name": "b", "source": {"name": "constant", "value": 1}}],
            "output": {"snapshot_times": [0.1], "energy_trace": true}}"#,
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = bin()
        .args(["run", "--format", "csv", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("snapshot_000002.csv")).unwrap();
    assert_eq!(csv.lines().count(), 33);
    assert!(!out_dir.join("snapshot_000002.vtk").exists());
    assert!(out_dir.join("energy.csv").exists());
    assert!(out_dir.join("summary.json").exists());
}

#[test]
fn energy_audit_prints_drift() {
    let dir = scratch("audit");
    let out = bin()
        .args([
            "--threads",
            "1",
            "energy-audit",
            "--pairing",
            "rtn1",
            "--n",
            "4",
            "--steps",
            "10",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("max relative drift"));
    let trace = std::fs::read_to_string(dir.join("energy_rtn1.csv")).unwrap();
    assert_eq!(trace.lines().count(), 12);
    assert!(trace.starts_with("t,energy_lossless,energy_damped"));
}

#[test]
fn convergence_writes_table() {
    let dir = scratch("conv");
    let out = bin()
        .args([
            "convergence",
            "--pairing",
            "rtn0",
            "--levels",
            "8,16",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.join("convergence_rtn0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 2);
}

#[test]
fn rejects_unknown_pairing() {
    let out = bin()
        .args(["convergence", "--pairing", "bdm3"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bdm3"));
}
