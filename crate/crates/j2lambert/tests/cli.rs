use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use j2lambert::bench::BenchReport;
use j2lambert::cli::{run, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE};
use j2lambert_core::BodyParams;

fn j2lambert(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("j2lambert").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn field<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no `{key}` in {out}"))
}

/// Quarter of a circular orbit at 10 body radii.
fn quarter_circle() -> (String, String, String) {
    let r = 10.0 * BodyParams::JUPITER.radius;
    let period = 2.0 * PI * (r.powi(3) / BodyParams::JUPITER.mu).sqrt();
    (
        format!("{r},0,0"),
        format!("0,{r},0"),
        format!("{}", period / 4.0),
    )
}

#[test]
fn cold_start_without_j2_needs_at_most_one_iteration() {
    let (r0, rf, tof) = quarter_circle();
    let (code, out, err) = j2lambert(&[
        "solve",
        "--r0",
        &r0,
        "--rf",
        &rf,
        "--tof",
        &tof,
        "--body",
        "jupiter-2body",
        "--cold-start",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(field(&out, "converged"), "true");
    assert!(field(&out, "iterations").parse::<u32>().unwrap() <= 1);
}

#[test]
fn solve_with_j2_and_iteration_budget() {
    let (r0, rf, tof) = quarter_circle();
    let (code, out, _) = j2lambert(&[
        "solve",
        "--r0",
        &r0,
        "--rf",
        &rf,
        "--tof",
        &tof,
        "--cold-start",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(field(&out, "terminal_error_km").parse::<f64>().unwrap() <= 1e-3);
    assert!(field(&out, "iterations").parse::<u32>().unwrap() >= 1);

    let (code, out, _) = j2lambert(&[
        "solve",
        "--r0",
        &r0,
        "--rf",
        &rf,
        "--tof",
        &tof,
        "--cold-start",
        "--max-iter",
        "1",
        "--tol",
        "1e-12",
    ]);
    assert_eq!(code, EXIT_NOT_CONVERGED, "{out}");
    assert_eq!(field(&out, "converged"), "false");
}

#[test]
fn usage_errors_exit_with_two() {
    let (r0, rf, tof) = quarter_circle();
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["solve", "--r0", &r0, "--rf", &rf, "--tof", &tof],
        vec![
            "solve",
            "--r0",
            "1,2",
            "--rf",
            &rf,
            "--tof",
            &tof,
            "--cold-start",
        ],
        vec![
            "solve",
            "--r0",
            &r0,
            "--rf",
            &rf,
            "--tof",
            &tof,
            "--cold-start",
            "--body",
            "pluto",
        ],
        vec!["gen", "--n", "3"],
        vec!["gen", "--n", "3", "--ranges", "wide", "--out", "x.csv"],
        vec!["bench", "--mode", "sideways"],
        vec!["bench", "--revs", "0", "--samples-per-rev", "1"],
        vec!["train", "--in", "/nonexistent.csv", "--model-out", "m.txt"],
    ];
    for args in cases {
        let (code, _, err) = j2lambert(&args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(!err.is_empty());
    }
    let (code, out, _) = j2lambert(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("bench"));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let (code, _, err) = j2lambert(&[
            "gen",
            "--n",
            "100",
            "--seed",
            "7",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), 101);
}

#[test]
fn gen_stats_train_solve_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    let (code, _, err) = j2lambert(&["gen", "--n", "400", "--seed", "3", "--out", &p("d.csv")]);
    assert_eq!(code, EXIT_OK, "{err}");

    let (code, out, err) = j2lambert(&[
        "stats",
        "--in",
        &p("d.csv"),
        "--forms",
        "v-Car,dv2-Sph",
        "--out",
        &p("screen"),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("selected: "));
    assert!(Path::new(&p("screen")).join("correlation.csv").is_file());

    let (code, out, err) = j2lambert(&[
        "train",
        "--in",
        &p("d.csv"),
        "--layers",
        "8,8",
        "--epochs",
        "3",
        "--lr",
        "0.01",
        "--batch",
        "64",
        "--seed",
        "1",
        "--model-out",
        &p("m.txt"),
        "--history-out",
        &p("h.csv"),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("best epoch"));
    assert_eq!(
        std::fs::read_to_string(p("h.csv")).unwrap().lines().count(),
        4
    );

    let (r0, rf, tof) = quarter_circle();
    let (code, out, err) = j2lambert(&[
        "solve",
        "--r0",
        &r0,
        "--rf",
        &rf,
        "--tof",
        &tof,
        "--model",
        &p("m.txt"),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(field(&out, "converged"), "true");

    let (code, out, err) = j2lambert(&[
        "bench",
        "--mode",
        "total",
        "--model",
        &p("m.txt"),
        "--gen-seconds",
        "1",
        "--train-seconds",
        "2",
        "--revs",
        "0",
        "--samples-per-rev",
        "2",
        "--batches",
        "1,10",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("# crossover: "));
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 3);
    let (code, _, _) = j2lambert(&[
        "bench",
        "--mode",
        "total",
        "--model",
        &p("m.txt"),
        "--revs",
        "0",
    ]);
    assert_eq!(code, EXIT_USAGE);

    let (code, _, _) = j2lambert(&[
        "train",
        "--in",
        &p("d.csv"),
        "--form",
        "v-Car",
        "--epochs",
        "1",
        "--model-out",
        &p("v.txt"),
    ]);
    assert_eq!(code, EXIT_OK);
    let (code, _, err) = j2lambert(&[
        "solve",
        "--r0",
        &r0,
        "--rf",
        &rf,
        "--tof",
        &tof,
        "--model",
        &p("v.txt"),
    ]);
    assert_eq!(code, EXIT_USAGE, "wrong-layout model: {err}");
}

#[test]
fn bench_conv_csv_parses_back() {
    let (code, out, err) = j2lambert(&[
        "bench",
        "--mode",
        "conv",
        "--revs",
        "0,1",
        "--samples-per-rev",
        "3",
        "--methods",
        "SN",
        "--seed",
        "4",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let report = BenchReport::from_csv(&out).unwrap();
    assert_eq!(report.seed, 4);
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.to_csv(), out);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stress.csv");
    let (code, _, err) = j2lambert(&[
        "bench",
        "--mode",
        "stress",
        "--angle",
        "360",
        "--revs",
        "0",
        "--samples-per-rev",
        "2",
        "--methods",
        "sn",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let stress = BenchReport::from_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(stress.note.contains("360"));
    assert_eq!(stress.rows[0].ratio, 1.0);
    let (code, _, _) = j2lambert(&[
        "bench",
        "--mode",
        "stress",
        "--angle",
        "90",
        "--methods",
        "SN",
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    let out = dir.path().join("d.csv");
    std::fs::write(
        &cfg,
        format!(
            "seed = 7\n[gen]\nn = 100\nout = {:?}\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let (code, _, err) = j2lambert(&["gen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let direct = dir.path().join("e.csv");
    j2lambert(&[
        "gen",
        "--n",
        "100",
        "--seed",
        "7",
        "--out",
        direct.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(&direct).unwrap()
    );

    let (code, _, _) = j2lambert(&["gen", "--config", cfg.to_str().unwrap(), "--n", "5"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 6);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_j2lambert");
    let (r0, rf, tof) = quarter_circle();
    let ok = Command::new(bin)
        .args([
            "solve",
            "--r0",
            &r0,
            "--rf",
            &rf,
            "--tof",
            &tof,
            "--cold-start",
            "--body",
            "jupiter-2body",
        ])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let usage = Command::new(bin)
        .args(["solve", "--tof", "1"])
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let budget = Command::new(bin)
        .args([
            "solve",
            "--r0",
            &r0,
            "--rf",
            &rf,
            "--tof",
            &tof,
            "--cold-start",
            "--max-iter",
            "1",
            "--tol",
            "1e-12",
        ])
        .output()
        .unwrap();
    assert_eq!(budget.status.code(), Some(1));
}
