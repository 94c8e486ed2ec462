use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use phasefield::io::{parse_config, ENERGIES_HEADER, SWEEP_HEADER};

const COARSE_TRACTION: &str = "case = \"traction\"\nsnapshot_stride = 2\n[traction]\nh = 0.05\nincrements = 6\n";

fn phasefield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasefield"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn validate_echoes_a_reparsable_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "case = \"traction\"\n[material]\nell = 0.05\n");
    let out = phasefield(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let echo = String::from_utf8(out.stdout).unwrap();
    let parsed = parse_config(&echo).unwrap();
    assert_eq!(parsed.material.ell, 0.05);
    assert_eq!(parsed, parse_config(&fs::read_to_string(&cfg).unwrap()).unwrap());
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for w in ["0.0", "2.0", "2.5"] {
        let cfg = write(dir.path(), "w.toml", &format!("case = \"surfing\"\n[solver]\nomega = {w}\n"));
        let out = phasefield(&["validate", &cfg]);
        assert_eq!(out.status.code(), Some(2), "omega {w}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("(0, 2)"));
    }
    let cfg = write(dir.path(), "u.toml", "case = \"surfing\"\nspeeed = 1\n[solver]\nomga = 1.2\n");
    let out = phasefield(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("speeed") && err.contains("solver.omga"), "{err}");
}

#[test]
fn io_errors_exit_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = phasefield(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let cfg = write(dir.path(), "c.toml", COARSE_TRACTION);
    let blocker = write(dir.path(), "file", "");
    let out = phasefield(&["run", &cfg, "--output-dir", &format!("{blocker}/sub")]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("file/sub"));
}

#[test]
fn run_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", COARSE_TRACTION);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = phasefield(&["run", &cfg, "--output-dir", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let energies = fs::read_to_string(a.join("energies.csv")).unwrap();
    assert_eq!(energies, fs::read_to_string(b.join("energies.csv")).unwrap());
    assert!(energies.lines().any(|l| l == ENERGIES_HEADER));
    let rows = data_rows(&energies);
    assert_eq!(rows.len(), 7);
    let dissipated: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(dissipated.windows(2).all(|w| w[1] >= w[0] - 1e-10));

    let prov = fs::read_to_string(a.join("provenance.toml")).unwrap();
    assert!(prov.contains(env!("CARGO_PKG_VERSION")));
    assert_eq!(parse_config(&prov).unwrap().snapshot_stride, 2);

    let snaps: Vec<_> = fs::read_dir(a.join("snapshots")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(snaps.len(), 4);
    let vtk = fs::read_to_string(a.join("snapshots/step_0006.vtk")).unwrap();
    for key in ["POINTS", "CELLS", "CELL_TYPES", "POINT_DATA", "SCALARS alpha", "VECTORS u"] {
        assert!(vtk.contains(key), "{key}");
    }
    assert!(fs::read_to_string(a.join("iterations.log")).unwrap().lines().count() > 7);
}

#[test]
fn stride_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", COARSE_TRACTION);
    let out_dir = dir.path().join("o");
    let out = phasefield(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap(), "--snapshot-stride", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out_dir.join("snapshots").exists());
}

#[test]
fn non_convergence_exits_with_code_three_and_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{COARSE_TRACTION}\n[solver]\nmax_am_iterations = 2\n"));
    let out_dir = dir.path().join("o");
    let out = phasefield(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let rows = data_rows(&fs::read_to_string(out_dir.join("energies.csv")).unwrap());
    assert!(!rows.is_empty() && rows.len() < 7);
    assert!(String::from_utf8_lossy(&out.stderr).contains("load step"));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "s.toml",
        "parameter = \"omega\"\nvalues = [1.6, 1.0]\n[base]\ncase = \"traction\"\n[base.traction]\nh = 0.05\nincrements = 6\n",
    );
    let out_dir = dir.path().join("sw");
    let out = phasefield(&["sweep", &spec, "--output-dir", out_dir.to_str().unwrap(), "--threads", "2", "--snapshot-stride", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.lines().any(|l| l == SWEEP_HEADER));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "1");
    assert_eq!(rows[1][6].parse::<f64>().unwrap(), 0.0);
    let am: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    let newton: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    let expect = 100.0 * (1.0 - (am[0] + newton[0]) / (am[1] + newton[1]));
    assert!((rows[0][6].parse::<f64>().unwrap() - expect).abs() < 1e-4);
    assert_eq!(fs::read_dir(&out_dir).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).count(), 2);
}
