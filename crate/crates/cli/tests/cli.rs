use htspectra_cli::io::{fmt17, read_density_csv, read_theory, write_density_csv};
use htspectra_cli::Cli;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn htspectra(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htspectra"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HTSPECTRA_SEED")
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn wigner_density_at_origin() {
    let dir = TempDir::new().unwrap();
    ok(&htspectra(&["theory", "--model", "wigner", "--alpha", "1.0", "--t", "0.001"], dir.path()));
    let rows = read_density_csv(&dir.path().join("density.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!((rows[0].1 - 0.3183).abs() < 1e-4, "{}", rows[0].1);
}

#[test]
fn semicircle_value() {
    let dir = TempDir::new().unwrap();
    ok(&htspectra(&["theory", "--alpha", "2.0", "--t", "1.0"], dir.path()));
    let rows = read_density_csv(&dir.path().join("density.csv")).unwrap();
    assert!((rows[0].1 - 0.2756644).abs() < 1e-6, "{}", rows[0].1);
}

#[test]
fn wishart_sidecar_atom() {
    let dir = TempDir::new().unwrap();
    ok(&htspectra(
        &["theory", "--model", "wishart", "--alpha", "1.2", "--gamma", "0.5", "--points", "80"],
        dir.path(),
    ));
    let side = json(&dir.path().join("density.json"));
    let atom = side["atom_at_zero"].as_f64().unwrap();
    assert!((atom - 0.5).abs() <= 1e-3, "{atom}");
    assert_eq!(side["model"], "wishart");
    assert_eq!(side["gamma"], 0.5);
    for key in ["alpha", "tail_constant", "mass_check", "eps_floor"] {
        assert!(side[key].is_number(), "{key}");
    }
    assert!(dir.path().join("density.plt").exists());
    assert!(dir.path().join("theory.config.json").exists());
}

#[test]
fn invalid_alpha_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    for cmd in ["theory", "simulate"] {
        let o = htspectra(&[cmd, "--model", "wigner", "--alpha", "2.5"], dir.path());
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).contains("--alpha"), "{}", stderr(&o));
    }
}

#[test]
fn inconsistent_flags_name_the_flag() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["theory", "--alpha", "1", "--gamma", "0.5"], "--gamma"),
        (&["theory", "--model", "wishart", "--alpha", "1"], "--gamma"),
        (&["theory", "--model", "wishart", "--alpha", "1", "--gamma", "1.5"], "--gamma"),
        (&["theory", "--model", "band", "--alpha", "1"], "--profile"),
        (&["theory", "--model", "perturbed", "--alpha", "1", "--diag", "{\"atoms\":[]}"], "--diag"),
    ];
    for (args, flag) in cases {
        let o = htspectra(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains(flag), "{args:?}: {}", stderr(&o));
    }
    let o = htspectra(&["nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulation_is_reproducible() {
    let dirs: Vec<TempDir> = (0..3).map(|_| TempDir::new().unwrap()).collect();
    let args = ["simulate", "--alpha", "1.5", "--n", "120", "--trials", "3"];
    let mut a = args.to_vec();
    a.extend(["--seed", "42"]);
    ok(&htspectra(&a, dirs[0].path()));
    ok(&htspectra(&a, dirs[1].path()));
    let env = Command::new(env!("CARGO_BIN_EXE_htspectra"))
        .args(args)
        .arg("--out")
        .arg(dirs[2].path())
        .env("HTSPECTRA_SEED", "42")
        .output()
        .unwrap();
    ok(&env);
    let csv: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| fs::read(d.path().join("eigenvalues.csv")).unwrap())
        .collect();
    assert_eq!(csv[0], csv[1]);
    assert_eq!(csv[0], csv[2]);
    let text = String::from_utf8(csv[0].clone()).unwrap();
    assert!(text.starts_with("trial,lambda\n"));
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 1 + 3 * 120);
}

#[test]
fn wigner_campaign_agrees_with_theory() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&htspectra(&["theory", "--alpha", "1.5"], d));
    ok(&htspectra(&["simulate", "--alpha", "1.5", "--n", "2000", "--trials", "10", "--seed", "42"], d));
    ok(&htspectra(
        &[
            "compare",
            "--theory",
            d.join("density.csv").to_str().unwrap(),
            "--eigenvalues",
            d.join("eigenvalues.csv").to_str().unwrap(),
            "--window=-10:10",
            "--exclude-zero",
            "0.2",
        ],
        d,
    ));
    let report = json(&d.join("compare.json"));
    let ks = report["pooled"]["ks"].as_f64().unwrap();
    assert!(ks <= 0.05, "{ks}");
    assert_eq!(report["per_trial_ks"].as_array().unwrap().len(), 10);
}

#[test]
fn deterministic_quantiles_match_their_curve() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&htspectra(&["theory", "--alpha", "1.5", "--points", "200"], d));
    let curve = read_theory(&d.join("density.csv")).unwrap();
    let cdf = curve.cdf();
    let n = 2000;
    let mut text = String::from("trial,lambda\n");
    for k in 0..n {
        let p = (k as f64 + 0.5) / n as f64;
        let (mut lo, mut hi) = (-1e9, 1e9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf.eval(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        text.push_str(&format!("0,{}\n", fmt17(0.5 * (lo + hi))));
    }
    fs::write(d.join("eigenvalues.csv"), text).unwrap();
    let o = htspectra(
        &[
            "compare",
            "--theory",
            d.join("density.csv").to_str().unwrap(),
            "--eigenvalues",
            d.join("eigenvalues.csv").to_str().unwrap(),
        ],
        d,
    );
    ok(&o);
    assert!(stderr(&o).contains("not found"));
    let ks = json(&d.join("compare.json"))["pooled"]["ks"].as_f64().unwrap();
    assert!(ks <= 1.0 / n as f64, "{ks}");
}

#[test]
fn semicircle_against_sign_matrices() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&htspectra(&["theory", "--alpha", "2", "--points", "300"], d));
    ok(&htspectra(&["simulate", "--alpha", "2", "--n", "800", "--trials", "3", "--seed", "5"], d));
    ok(&htspectra(
        &[
            "compare",
            "--theory",
            d.join("density.csv").to_str().unwrap(),
            "--eigenvalues",
            d.join("eigenvalues.csv").to_str().unwrap(),
            "--window=-2.5:2.5",
        ],
        d,
    ));
    let ks = json(&d.join("compare.json"))["pooled"]["ks"].as_f64().unwrap();
    assert!(ks <= 0.05, "{ks}");
}

#[test]
fn mismatched_alpha_warns_but_compares() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&htspectra(&["theory", "--alpha", "1.5", "--points", "100"], d));
    ok(&htspectra(&["simulate", "--alpha", "1.2", "--n", "100", "--trials", "2"], d));
    let o = htspectra(
        &[
            "compare",
            "--theory",
            d.join("density.csv").to_str().unwrap(),
            "--eigenvalues",
            d.join("eigenvalues.csv").to_str().unwrap(),
        ],
        d,
    );
    ok(&o);
    assert!(stderr(&o).contains("alpha mismatch"), "{}", stderr(&o));
    let report = json(&d.join("compare.json"));
    assert_eq!(report["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn parse_errors_name_file_and_line() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&htspectra(&["theory", "--alpha", "1", "--t", "0.5,1.0"], d));
    let bad = d.join("bad.csv");
    fs::write(&bad, "trial,lambda\n0,1.0\n0,abc\n").unwrap();
    let o = htspectra(
        &[
            "compare",
            "--theory",
            d.join("density.csv").to_str().unwrap(),
            "--eigenvalues",
            bad.to_str().unwrap(),
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.csv:3"), "{}", stderr(&o));
}

#[test]
fn csv_round_trip_is_lossless() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("rt.csv");
    let values = [
        0.1,
        1.0 / 3.0,
        -2.0f64.sqrt(),
        f64::MIN_POSITIVE,
        5e-324,
        f64::MAX,
        123456789.123456789,
        -0.0,
        std::f64::consts::PI * 1e-200,
    ];
    let rows: Vec<(f64, f64)> = values.iter().map(|&v| (v, v * 0.7)).collect();
    write_density_csv(&path, &rows).unwrap();
    let back = read_density_csv(&path).unwrap();
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }
}

#[test]
fn config_echo_reproduces_the_run() {
    let first = TempDir::new().unwrap();
    ok(&htspectra(&["theory", "--alpha", "0.8", "--t=-0.3,0.2,4"], first.path()));
    let text = fs::read_to_string(first.path().join("theory.config.json")).unwrap();
    let mut cli: Cli = serde_json::from_str(&text).unwrap();
    let second = TempDir::new().unwrap();
    cli.out = second.path().to_path_buf();
    htspectra_cli::run(&cli).unwrap();
    assert_eq!(
        fs::read(first.path().join("density.csv")).unwrap(),
        fs::read(second.path().join("density.csv")).unwrap()
    );
}

#[test]
fn critical_set_of_the_semicircle() {
    let dir = TempDir::new().unwrap();
    ok(&htspectra(&["critical-set", "--alpha", "2"], dir.path()));
    let set = json(&dir.path().join("critical_set.json"));
    let pts = set["points"].as_array().unwrap();
    assert!(pts.iter().any(|p| (p.as_f64().unwrap() - 2.0).abs() < 1e-8), "{pts:?}");
}

#[test]
fn selftest_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = htspectra(&["selftest", "1"], dir.path());
    ok(&o);
    assert!(String::from_utf8_lossy(&o.stdout).contains("criterion  1 PASS"));
    let o = htspectra(&["selftest", "12"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
