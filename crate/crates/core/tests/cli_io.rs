use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rchwave::cli::{Cli, PartialConfig, Table, SWEEP_COLUMNS};

fn rchwave(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rchwave"));
    cmd.args(args).env("RUST_LOG", "error");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn seed_summary() {
    let o = rchwave(&["seed", "--amplitude", "0.1", "--omega", "1", "--modes", "16"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("c = 5.1500000000000001e-1"), "{text}");
    assert!(text.contains("A = 1.0175000000000002e-2"));
    assert!(text.contains("newton:"));
}

#[test]
fn zero_omega_is_a_config_error() {
    let o = rchwave(&["seed", "--omega", "0"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("does not exist"));
}

#[test]
fn bad_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "omega = 1\nnot a pair\n").unwrap();
    let o = rchwave(&["trace", "--config", path(&cfg)], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));

    let o = rchwave(&["analyze", "--omega", "1"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--c"));

    let o = rchwave(&["trace", "--omega", "1", "--c-start", "0.4"], &[]);
    assert_eq!(o.status.code(), Some(1));

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = rchwave(&["plot", path(&empty), "--out", path(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no data rows"));

    let o = rchwave(&["sweep", "--c-end", "0.53", "--modes", "16"], &[("RCHWAVE_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two_with_speed() {
    let dir = tempfile::tempdir().unwrap();
    let o = rchwave(&["analyze", "--omega", "1", "--c", "0.95", "--modes", "16", "--out", path(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("c = 0.95"), "{}", stderr(&o));
}

#[test]
fn trace_is_deterministic_and_config_is_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# family at omega 2\nomega = 2\nc_start = 1.02\nc_end = 1.2 # short\nc_step = 0.05\nmodes = 32\n").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = rchwave(&["trace", "--config", path(&cfg), "--c-end", "1.15", "--out", path(out)], &[]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ta = fs::read(a.join("trace_omega2.csv")).unwrap();
    assert_eq!(ta, fs::read(b.join("trace_omega2.csv")).unwrap());
    let table = Table::read(&a.join("trace_omega2.csv")).unwrap();
    let c = table.column("c").unwrap();
    assert!((c[c.len() - 1] - 1.15).abs() < 1e-12);
    assert!(table.column("omega").unwrap().iter().all(|&w| w == 2.0));
    // 17 significant digits.
    let first = &table.rows[0][1];
    assert_eq!(first.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn sweep_table_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let o = rchwave(
        &["sweep", "--omega", "1", "--c-start", "0.51", "--c-end", "0.6", "--c-step", "0.03", "--modes", "32", "--out", out],
        &[("RCHWAVE_THREADS", "2")],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = dir.path().join("sweep_omega1.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), SWEEP_COLUMNS.join(","));
    let table = Table::read(&csv).unwrap();
    let e = table.column("E").unwrap();
    assert!(e.windows(2).all(|p| p[1] > p[0]));
    assert!(table.rows.iter().all(|r| r[14] == "spectrally_stable"));
    let svg = fs::read_to_string(dir.path().join("sweep_omega1_E.svg")).unwrap();
    assert!(svg.contains("ω = 1") && svg.contains("<polyline"));

    // Every numeric column of the sweep table renders.
    for col in &SWEEP_COLUMNS[1..14] {
        let o = rchwave(&["plot", path(&csv), "--x", "c", "--y", col, "--omega", "1", "--out", out], &[]);
        assert!(o.status.success(), "{col}: {}", stderr(&o));
    }
    let o = rchwave(&["plot", path(&csv), "--x", "c", "--y", "missing", "--out", out], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing"));
}

#[test]
fn evolve_writes_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = rchwave(
        &[
            "evolve", "--omega", "1", "--c", "0.53", "--modes", "32", "--T", "1", "--dt", "0.002", "--dt-out", "0.25",
            "--perturbation", "0.01", "--seed-rng", "42", "--out", path(dir.path()),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = Table::read(&dir.path().join("evolve_omega1_c0.53.csv")).unwrap();
    assert_eq!(table.header, ["t", "distance", "M", "E", "F"]);
    let t = table.column("t").unwrap();
    assert_eq!(t.len(), 5);
    assert!((t[4] - 1.0).abs() < 1e-12);
    assert!(table.column("distance").unwrap()[0] > 0.0);
}

#[test]
fn flags_parse() {
    use clap::Parser;
    let cli = Cli::try_parse_from(["rchwave", "evolve", "--c", "0.8", "--T", "3", "--seed-rng", "5"]).unwrap();
    let cfg = cli.flags.resolve().unwrap();
    assert_eq!(cfg.c, Some(0.8));
    assert_eq!(cfg.evolve.t_final, 3.0);
    assert_eq!(cfg.seed_rng, Some(5));
    assert!(Cli::try_parse_from(["rchwave", "bogus"]).is_err());
    assert!(PartialConfig::parse("omega = x").is_err());
}
