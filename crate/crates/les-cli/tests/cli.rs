//! End-to-end tests of the `les` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn les(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_les"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("les-cli-test-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_toy_data(dir: &Path) {
    // y = 2 x1 - x3 + small deterministic wiggle; 12 rows, 4 covariates
    let mut data = String::from("x1,x2,x3,x4,y\n");
    let mut s = 0.37f64;
    for i in 0..12 {
        let mut draw = || {
            s = (s * 73.0 + 11.17 + i as f64).sin();
            s
        };
        let x1 = draw();
        let x2 = draw();
        let x3 = draw();
        let x4 = draw();
        let y = 2.0 * x1 - x3 + 0.05 * draw();
        data.push_str(&format!("{x1:.12},{x2:.12},{x3:.12},{x4:.12},{y:.12}\n"));
    }
    fs::write(dir.join("data.csv"), data).unwrap();
    fs::write(
        dir.join("groups.csv"),
        "variable,group\nx1,g1\nx2,g1\nx3,g2\nx4,g2\n",
    )
    .unwrap();
}

fn parse_csv_section<'a>(content: &'a str, section: &str) -> Vec<Vec<&'a str>> {
    let mut rows = Vec::new();
    let mut inside = false;
    for line in content.lines() {
        if let Some(name) = line.strip_prefix("section,") {
            inside = name == section;
            continue;
        }
        if inside && !line.trim().is_empty() {
            rows.push(line.split(',').collect());
        }
    }
    rows
}

#[test]
fn fit_writes_coefficients_that_round_trip() {
    let dir = workdir("roundtrip");
    write_toy_data(&dir);
    let out = les(
        &[
            "fit",
            "--input",
            "data.csv",
            "--response",
            "y",
            "--groups",
            "groups.csv",
            "--lambda",
            "0.03",
            "--alpha",
            "1.5",
            "--format",
            "csv",
            "--out",
            "fit.csv",
        ],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let content = fs::read_to_string(dir.join("fit.csv")).unwrap();
    let rows = parse_csv_section(&content, "coefficients");
    assert_eq!(rows[0], vec!["name", "group", "estimate", "selected"]);
    assert_eq!(rows.len(), 5);

    // recompute in-process and compare to full printed precision
    let (x, y, names) = {
        let text = fs::read_to_string(dir.join("data.csv")).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let mut flat = Vec::new();
        let mut resp = Vec::new();
        let mut n = 0;
        for line in lines {
            let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            flat.extend_from_slice(&cells[..4]);
            resp.push(cells[4]);
            n += 1;
        }
        (
            les_core::linalg::Mat::from_rows(n, 4, &flat),
            resp,
            header[..4].iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        )
    };
    let part = les_core::GroupPartition::contiguous(&[2, 2]).unwrap();
    let (design, response) = les_core::standardize(&x, &y, part).unwrap();
    let config = les_core::PenaltyConfig::with_share_weights(0.03, 1.5, design.partition()).unwrap();
    let fit = les_core::fit_les(
        &design,
        &response,
        &config,
        &les_core::SolverOptions::default(),
        None,
    )
    .unwrap();
    let expected = fit.original_scale_beta(&design);
    for (row, (name, want)) in rows[1..].iter().zip(names.iter().zip(&expected)) {
        assert_eq!(row[0], name);
        let got: f64 = row[2].parse().unwrap();
        let rel = if *want == 0.0 {
            got.abs()
        } else {
            ((got - want) / want).abs()
        };
        assert!(rel <= 1e-11, "{name}: file {got} vs memory {want}");
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn fit_above_lambda_max_gives_all_zero_table_and_exit_zero() {
    let dir = workdir("lmax");
    write_toy_data(&dir);
    // compute lambda_max in-process
    let text = fs::read_to_string(dir.join("data.csv")).unwrap();
    let mut lines = text.lines();
    lines.next();
    let mut flat = Vec::new();
    let mut resp = Vec::new();
    let mut n = 0;
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        flat.extend_from_slice(&cells[..4]);
        resp.push(cells[4]);
        n += 1;
    }
    let x = les_core::linalg::Mat::from_rows(n, 4, &flat);
    let part = les_core::GroupPartition::contiguous(&[2, 2]).unwrap();
    let (design, response) = les_core::standardize(&x, &resp, part).unwrap();
    let weights = vec![0.5, 0.5];
    let lmax = les_core::lambda_max(&design, &response, 1.0, &weights);

    let out = les(
        &[
            "fit",
            "--input",
            "data.csv",
            "--response",
            "y",
            "--groups",
            "groups.csv",
            "--lambda",
            &format!("{}", lmax * 1.01),
            "--alpha",
            "1",
            "--format",
            "csv",
            "--out",
            "fit.csv",
        ],
        &dir,
    );
    assert!(out.status.success());
    let content = fs::read_to_string(dir.join("fit.csv")).unwrap();
    for row in &parse_csv_section(&content, "coefficients")[1..] {
        let est: f64 = row[2].parse().unwrap();
        assert_eq!(est, 0.0);
        assert_eq!(row[3], "0");
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn tune_with_validation_selects_and_reports() {
    let dir = workdir("tune");
    write_toy_data(&dir);
    fs::copy(dir.join("data.csv"), dir.join("valid.csv")).unwrap();
    let out = les(
        &[
            "tune",
            "--input",
            "data.csv",
            "--response",
            "y",
            "--groups",
            "groups.csv",
            "--criterion",
            "validation",
            "--validation-input",
            "valid.csv",
            "--grid-alphas",
            "1",
            "--grid-lambdas",
            "0.5,0.1,0.02",
            "--format",
            "csv",
            "--out",
            "tune.csv",
        ],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let content = fs::read_to_string(dir.join("tune.csv")).unwrap();
    let grid = parse_csv_section(&content, "grid");
    assert_eq!(grid.len(), 4); // header + 3 lambdas
    let selected_rows: Vec<_> = grid[1..]
        .iter()
        .filter(|r| *r.last().unwrap() == "1")
        .collect();
    assert_eq!(selected_rows.len(), 1);
    assert!(content.contains("section,coefficients"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_supplies_options_and_flags_win() {
    let dir = workdir("config");
    write_toy_data(&dir);
    fs::write(
        dir.join("run.cfg"),
        "[fit]\ninput = data.csv\nresponse = y\ngroups = groups.csv\nlambda = 0.03\nalpha = 1.0\nformat = csv\n",
    )
    .unwrap();
    let out = les(&["fit", "--config", "run.cfg", "--out", "a.csv"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // flag overrides the config lambda: a huge lambda zeroes everything
    let out = les(
        &[
            "fit", "--config", "run.cfg", "--lambda", "1000", "--out", "b.csv",
        ],
        &dir,
    );
    assert!(out.status.success());
    let content = fs::read_to_string(dir.join("b.csv")).unwrap();
    for row in &parse_csv_section(&content, "coefficients")[1..] {
        assert_eq!(row[2], "0");
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_match_error_classes() {
    let dir = workdir("exitcodes");
    write_toy_data(&dir);

    // usage error: missing --lambda
    let out = les(
        &[
            "fit", "--input", "data.csv", "--response", "y", "--groups", "groups.csv", "--alpha",
            "1",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));

    // data error: non-numeric cell
    fs::write(dir.join("bad.csv"), "x1,y\n1,2\nfoo,3\n").unwrap();
    let out = les(
        &[
            "fit",
            "--input",
            "bad.csv",
            "--response",
            "y",
            "--groups",
            "groups.csv",
            "--lambda",
            "0.1",
            "--alpha",
            "1",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("row 2"), "{msg}");

    // no partial artifact on failure
    let out = les(
        &[
            "fit",
            "--input",
            "bad.csv",
            "--response",
            "y",
            "--groups",
            "groups.csv",
            "--lambda",
            "0.1",
            "--alpha",
            "1",
            "--out",
            "never.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.join("never.csv").exists());
    assert!(!dir.join("never.csv.tmp").exists());

    // solver non-convergence: starve the sweep budget
    let out = les(
        &[
            "fit",
            "--input",
            "data.csv",
            "--response",
            "y",
            "--groups",
            "groups.csv",
            "--lambda",
            "0.001",
            "--alpha",
            "1",
            "--max-sweeps",
            "1",
            "--out",
            "starved.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(3));

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn custom_weights_are_loaded_and_validated() {
    let dir = workdir("weights");
    write_toy_data(&dir);
    fs::write(dir.join("w.txt"), "0.3\n0.7\n").unwrap();
    let out = les(
        &[
            "fit",
            "--input",
            "data.csv",
            "--response",
            "y",
            "--groups",
            "groups.csv",
            "--lambda",
            "0.05",
            "--alpha",
            "1",
            "--weights",
            "custom:w.txt",
        ],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // wrong count is a data error
    fs::write(dir.join("w3.txt"), "0.3\n0.3\n0.4\n").unwrap();
    let out = les(
        &[
            "fit",
            "--input",
            "data.csv",
            "--response",
            "y",
            "--groups",
            "groups.csv",
            "--lambda",
            "0.05",
            "--alpha",
            "1",
            "--weights",
            "custom:w3.txt",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn standardized_flag_adds_column() {
    let dir = workdir("stdcol");
    write_toy_data(&dir);
    let out = les(
        &[
            "fit",
            "--input",
            "data.csv",
            "--response",
            "y",
            "--groups",
            "groups.csv",
            "--lambda",
            "0.03",
            "--alpha",
            "1",
            "--standardized",
            "--format",
            "csv",
            "--out",
            "fit.csv",
        ],
        &dir,
    );
    assert!(out.status.success());
    let content = fs::read_to_string(dir.join("fit.csv")).unwrap();
    let rows = parse_csv_section(&content, "coefficients");
    assert_eq!(
        rows[0],
        vec!["name", "group", "estimate", "estimate_standardized", "selected"]
    );
    fs::remove_dir_all(&dir).ok();
}
