use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BITFLIP: &str = "# bit-flip channel\nfamily = bitflip\nbox = [[0.2, 0.8]]\nt = [0.4142]\nt_ref = [0.5]\n";

fn qchan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qchan")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn validate_bitflip_passes_all_conditions() {
    let dir = TempDir::new().unwrap();
    let fam = write(&dir, "bf.fam", BITFLIP);
    let out = qchan(&["validate", "--family", s(&fam)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for c in ["condition1", "condition2", "condition3"] {
        assert_eq!(v["result"][c], true, "{c}");
    }
    assert_eq!(v["context"]["command"], "validate");
    assert!(v["context"]["qchan_version"].is_string());
}

#[test]
fn validate_reports_failing_condition() {
    let dir = TempDir::new().unwrap();
    let fam = write(&dir, "rot.fam", "family = rotation\nbox = [[0, 1]]\n");
    let out = qchan(&["validate", "--family", s(&fam)]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["condition3"], false);
    assert_eq!(v["result"]["scaling"], "heisenberg");
}

#[test]
fn protocol_sweep_writes_three_rows() {
    let dir = TempDir::new().unwrap();
    let fam = write(&dir, "bf.fam", BITFLIP);
    let csv = dir.path().join("sweep.csv");
    let out = qchan(&["protocol-sweep", "--family", s(&fam), "--alpha", "0.5", "--n", "100,1000,10000", "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n,alpha,v,spacing,num_points,cost_bits,err_upper,err_exact,err_lower,thm1_rate");
    assert_eq!(lines.len(), 4);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&first[..6], &["100", "0.5", "1", "0.004", "151", "8"]);
    assert_eq!(first[8], "", "err_lower is only computed at n = 1");
    assert!(text.starts_with("# "), "context header comes first");
}

#[test]
fn malformed_family_exits_3_with_line() {
    let dir = TempDir::new().unwrap();
    let fam = write(&dir, "bad.fam", "family = bitflip\n\nbox = [[0.2, 0.8]\n");
    let out = qchan(&["validate", "--family", s(&fam)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    let fam = write(&dir, "unknown.fam", "family = bitflip\nbox = [[0.2, 0.8]]\nwidth = 2\n");
    let out = qchan(&["protocol-sweep", "--family", s(&fam)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn bad_command_line_exits_3() {
    assert_eq!(qchan(&["protocol-sweep", "--alpha", "x"]).status.code(), Some(3));
    assert_eq!(qchan(&["validate"]).status.code(), Some(3), "missing --family");
    assert_eq!(qchan(&["--help"]).status.code(), Some(0));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let fam = write(&dir, "bf.fam", BITFLIP);
    let runs: [&[&str]; 4] = [
        &["protocol-sweep", "--n", "1,100,1000"],
        &["metrology-sim", "--n", "10,200", "--trials", "500"],
        &["d2", "--restarts", "8", "--seed", "0x1234"],
        &["fisher", "--sweep", "--points", "7", "--format", "json"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|r| {
                let path = dir.path().join(format!("out{k}_{r}"));
                let mut full = args.to_vec();
                full.extend(["--family", s(&fam), "--out", s(&path)]);
                let out = qchan(&full);
                assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
                fs::read(&path).unwrap()
            })
            .collect();
        assert!(!outputs[0].is_empty());
        assert_eq!(outputs[0], outputs[1], "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let fam = write(&dir, "bf.fam", BITFLIP);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_qchan"))
            .args(["metrology-sim", "--n", "20,300", "--trials", "400", "--family", s(&fam)])
            .env("QCHAN_THREADS", threads)
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("4"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn metrology_sim_columns() {
    let dir = TempDir::new().unwrap();
    let fam = write(&dir, "bf.fam", BITFLIP);
    let out = qchan(&["metrology-sim", "--family", s(&fam), "--n", "1000", "--trials", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n,trials,mse_empirical,mse_stderr,inaccuracy_p,mi_empirical,bound1,bound2,condition_ok");
    let row: Vec<&str> = lines[1].split(',').collect();
    let mse: f64 = row[2].parse().unwrap();
    let expected = 0.4142 * (1.0 - 0.4142) / 1000.0;
    assert!((mse / expected - 1.0).abs() < 0.15, "{mse} vs {expected}");
    assert_eq!(row[8], "true");

    let fam = write(&dir, "dep.fam", "family = depolarizing\nbox = [[0.1, 0.6]]\n");
    assert_eq!(qchan(&["metrology-sim", "--family", s(&fam)]).status.code(), Some(3));
}

#[test]
fn bounds_from_flags_and_family() {
    let out = qchan(&["bounds", "--v", "1", "--beta", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["simulation"]["rate"], 1.0);

    let dir = TempDir::new().unwrap();
    let fam = write(&dir, "pauli.fam", "family = pauli\nbox = [[0.1, 0.2], [0.1, 0.2], [0.1, 0.2]]\n");
    let out = qchan(&["bounds", "--family", s(&fam), "--eps", "0.5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("communication,"), "{text}");
    let v: serde_json::Value =
        serde_json::from_slice(&qchan(&["bounds", "--family", s(&fam), "--eps", "0.5"]).stdout).unwrap();
    assert_eq!(v["result"]["communication"]["rate"], 0.75);
}

#[test]
fn d2_reports_infinity_on_disjoint_support() {
    let dir = TempDir::new().unwrap();
    let fam = write(&dir, "bf.fam", "family = bitflip\nbox = [[0, 1]]\nt = [0]\nt_ref = [1]\n");
    let out = qchan(&["d2", "--family", s(&fam)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["infinite"], true);

    let fam = write(&dir, "noref.fam", "family = bitflip\nbox = [[0.2, 0.8]]\n");
    assert_eq!(qchan(&["d2", "--family", s(&fam)]).status.code(), Some(3));
}
