use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ibob(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_ibob"))
        .args(args)
        .env("IBOB_LOG", "error")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(str::to_owned)
        .collect()
}

/// Field `name` of the single report row printed by `fom`.
fn field(stdout: &str, name: &str) -> f64 {
    let mut lines = stdout.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    row[i].parse().unwrap()
}

#[test]
fn single_rf_band_writes_two_curves() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "rx_distances_m = [0.0, 0.25, 0.5]\n\n[[bands]]\nfrequency_hz = 2.4e9\nmodel = \"rf\"\n",
    );
    let out = dir.path().join("out");
    let r = ibob(&["simulate", "--config", &cfg, "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut files: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["2400000000_free_space.csv", "2400000000_in_body.csv"]);
    for f in &files {
        assert_eq!(csv_rows(&out.join(f)).len(), 3);
    }
}

#[test]
fn model_mismatch_needs_the_override_flag() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "rx_distances_m = [0.0, 0.1]\n\n[[bands]]\nfrequency_hz = 2.4e9\nmodel = \"eqs\"\n",
    );
    let r = ibob(&["simulate", "--config", &cfg, "--out", p(dir.path())]);
    assert_ne!(r.code, 0);
    assert_eq!(r.stderr.lines().count(), 1, "{}", r.stderr);
    assert!(r.stderr.starts_with("config:"), "{}", r.stderr);
}

#[test]
fn field_solved_band_writes_a_solver_log() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "rx_distances_m = [0.0, 0.1, 0.2]\n\n[[bands]]\nfrequency_hz = 21e6\nmodel = \"eqs\"\n\n[grid]\nspacing_m = 0.03\n\n[fom]\neval_distance_x_m = 0.2\n",
    );
    let r = ibob(&["simulate", "--config", &cfg, "--out", p(dir.path())]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let log = fs::read_to_string(dir.path().join("solver_log.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(
        lines.next(),
        Some("band_hz,scenario,distance_m,iterations,final_residual")
    );
    assert_eq!(lines.count(), 6);
}

#[test]
fn torso_sensitivity_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "rx_distances_m = [0.0, 0.25, 0.5]\n\n[[bands]]\nfrequency_hz = 400e6\nmodel = \"rf\"\n\n[[bands]]\nfrequency_hz = 900e6\nmodel = \"rf\"\n",
    );
    let r = ibob(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        p(dir.path()),
        "--torso-sensitivity",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = csv_rows(&dir.path().join("torso_sensitivity.csv"));
    assert_eq!(rows.len(), 6);
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first[0], "0.7");
    assert!((first[1].parse::<f64>().unwrap() - 0.105).abs() < 1e-12);
    assert_eq!(first[2], "400000000");
}

#[test]
fn fom_of_a_synthetic_pair() {
    let dir = TempDir::new().unwrap();
    let body = write(
        dir.path(),
        "400000000_in_body.csv",
        "distance_m,loss_db\n0,30\n0.25,55\n0.5,80\n",
    );
    let air = write(
        dir.path(),
        "400000000_free_space.csv",
        "distance_m,loss_db\n0,45\n0.5,70\n",
    );
    let r = ibob(&["fom", "--body", &body, "--air", &air, "--x", "0.5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(field(&r.stdout, "ll_x_db"), 50.0);
    assert_eq!(field(&r.stdout, "delta_pl_body_db"), -15.0);
    assert_eq!(field(&r.stdout, "fom_db"), 65.0);
    assert_eq!(field(&r.stdout, "band_hz"), 400e6);
    // Default report location.
    let saved = fs::read_to_string(dir.path().join("400000000_fom.csv")).unwrap();
    assert_eq!(saved, r.stdout);

    let w = ibob(&[
        "fom", "--body", &body, "--air", &air, "--x", "0.5", "--w-ll", "2", "--w-dpl", "0",
    ]);
    assert_eq!(field(&w.stdout, "weighted_fom_db"), 100.0);
}

#[test]
fn identical_flat_curves_score_zero() {
    let dir = TempDir::new().unwrap();
    let text = "distance_m,loss_db\n0,60\n0.3,60\n0.6,60\n";
    let body = write(dir.path(), "900000000_in_body.csv", text);
    let air = write(dir.path(), "900000000_free_space.csv", text);
    let r = ibob(&["fom", "--body", &body, "--air", &air, "--x", "0.3"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for name in ["ll_x_db", "delta_pl_body_db", "fom_db"] {
        assert_eq!(field(&r.stdout, name), 0.0);
    }
}

#[test]
fn fom_errors_are_one_line() {
    let dir = TempDir::new().unwrap();
    let body = write(
        dir.path(),
        "400000000_in_body.csv",
        "distance_m,loss_db\n0,30\n0.5,80\n",
    );
    let air = write(
        dir.path(),
        "400000000_free_space.csv",
        "distance_m,loss_db\n0,45\n0.5,70\n",
    );
    let far = ibob(&["fom", "--body", &body, "--air", &air, "--x", "0.7"]);
    assert_ne!(far.code, 0);
    assert!(far.stderr.starts_with("extrapolation:"), "{}", far.stderr);
    assert_eq!(far.stderr.lines().count(), 1);

    let other = write(
        dir.path(),
        "900000000_free_space.csv",
        "distance_m,loss_db\n0,45\n0.5,70\n",
    );
    let mixed = ibob(&["fom", "--body", &body, "--air", &other, "--x", "0.5"]);
    assert!(mixed.stderr.starts_with("pairing:"), "{}", mixed.stderr);

    let anon = write(dir.path(), "body.csv", "distance_m,loss_db\n0,30\n0.5,80\n");
    let unnamed = ibob(&["fom", "--body", &anon, "--air", &air, "--x", "0.5"]);
    assert!(unnamed.stderr.starts_with("config:"), "{}", unnamed.stderr);
    let named = ibob(&["fom", "--body", &anon, "--air", &air, "--x", "0.5", "--band-hz", "4e8"]);
    assert_eq!(named.code, 0, "{}", named.stderr);

    let levels = write(dir.path(), "levels.csv", "distance_m,loss_db\n0,-30\n0.5,-80\n");
    let raw = ibob(&[
        "fom",
        "--body",
        &levels,
        "--air",
        &levels,
        "--x",
        "0.5",
        "--band-hz",
        "4e8",
    ]);
    assert!(raw.stderr.starts_with("value:"), "{}", raw.stderr);

    let bad = ibob(&["fom", "--body", &body]);
    assert_eq!(bad.code, 2);
    assert!(bad.stderr.starts_with("argument:"), "{}", bad.stderr);
}

#[test]
fn negated_signal_levels_match_losses() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.csv");
    let body = write(dir.path(), "b.csv", "distance_m,loss_db\n0,-30\n0.5,-80\n");
    let air = write(dir.path(), "a.csv", "distance_m,loss_db\n0,-45\n0.5,-70\n");
    let r = ibob(&[
        "fom",
        "--body",
        &body,
        "--air",
        &air,
        "--x",
        "0.5",
        "--band-hz",
        "4e8",
        "--negate",
        "--out",
        p(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(field(&r.stdout, "fom_db"), 65.0);
    assert!(out.is_file());
}

/// Writes a curve pair and its report for one band; returns the report path.
fn band_files(dir: &Path, hz: u64, body0: f64, air0: f64, slope: f64) -> String {
    let body = write(
        dir,
        &format!("{hz}_in_body.csv"),
        &format!("distance_m,loss_db\n0,{body0}\n0.5,{}\n", body0 + slope),
    );
    let air = write(
        dir,
        &format!("{hz}_free_space.csv"),
        &format!("distance_m,loss_db\n0,{air0}\n0.5,{}\n", air0 + 20.0),
    );
    let r = ibob(&["fom", "--body", &body, "--air", &air, "--x", "0.5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    dir.join(format!("{hz}_fom.csv")).to_str().unwrap().to_owned()
}

#[test]
fn compare_ranks_and_draws() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    // FoM = slope - (body0 - air0).
    let reports = [
        band_files(d, 2_400_000_000, 50.0, 40.0, 13.0),
        band_files(d, 21_000_000, 30.0, 45.0, 30.0),
        band_files(d, 900_000_000, 45.0, 40.0, 13.0),
        band_files(d, 400_000_000, 44.0, 40.0, 14.0),
    ];
    let svg = d.join("svg");
    let mut args = vec!["compare"];
    args.extend(reports.iter().map(String::as_str));
    args.extend(["--svg", p(&svg)]);
    let r = ibob(&args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows: Vec<&str> = r.stdout.lines().skip(1).collect();
    let bands: Vec<&str> = rows.iter().map(|l| l.split_whitespace().nth(1).unwrap()).collect();
    assert_eq!(bands, ["21", "400", "900", "2.4"]);
    let foms: Vec<f64> = rows
        .iter()
        .map(|l| l.split_whitespace().nth(6).unwrap().parse().unwrap())
        .collect();
    assert_eq!(foms, [45.0, 10.0, 8.0, 3.0]);

    let bars = fs::read_to_string(svg.join("fom_bars.svg")).unwrap();
    let doc = roxmltree::Document::parse(&bars).unwrap();
    let rects: Vec<_> = doc
        .descendants()
        .filter(|n| n.has_tag_name("rect") && n.attribute("class") == Some("bar"))
        .collect();
    assert_eq!(rects.len(), 4);
    let hz: Vec<&str> = rects.iter().map(|n| n.attribute("data-band-hz").unwrap()).collect();
    assert_eq!(hz, ["21000000", "400000000", "900000000", "2400000000"]);
    assert!(doc.descendants().any(|n| n.text() == Some("45.00 dB")));

    let lines = fs::read_to_string(svg.join("path_loss.svg")).unwrap();
    let doc = roxmltree::Document::parse(&lines).unwrap();
    let curves = doc
        .descendants()
        .filter(|n| n.has_tag_name("polyline") && n.attribute("class") == Some("curve"))
        .count();
    assert_eq!(curves, 8);
    assert!(doc.descendants().any(|n| n.text() == Some("distance from body (m)")));

    // Same charts for the same inputs.
    let again = ibob(&args);
    assert_eq!(again.stdout, r.stdout);
    assert_eq!(fs::read_to_string(svg.join("fom_bars.svg")).unwrap(), bars);

    let single = ibob(&["compare", &reports[0], "--svg", p(&svg)]);
    assert_ne!(single.code, 0);
    assert!(single.stderr.starts_with("argument:"), "{}", single.stderr);
}
