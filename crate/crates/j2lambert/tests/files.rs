use std::path::Path;

use j2lambert::catalog::BodyCatalog;
use j2lambert::config::Settings;
use j2lambert::dataset::{columns, load_dataset, read_records, save_dataset, write_records};
use j2lambert::model_io::{load_model, save_history, save_model, write_history};
use j2lambert::screening::{column_stats_csv, correlation_csv, ranking_text, save_screening};
use j2lambert::Error;
use j2lambert_core::mlp::{train, Activation, MlpConfig, MlpModel, TrainConfig};
use j2lambert_core::sample::{generate_dataset, SampleForm, SampleRanges};
use j2lambert_core::stats::form_screening_report;
use j2lambert_core::BodyParams;

fn origin() -> &'static Path {
    Path::new("test")
}

#[test]
fn builtin_catalog() {
    let c = BodyCatalog::builtin();
    assert_eq!(c.names().collect::<Vec<_>>(), ["jupiter", "jupiter-2body"]);
    assert_eq!(c.resolve("jupiter").unwrap(), BodyParams::JUPITER);
    let two = c.resolve("jupiter-2body").unwrap();
    assert_eq!(
        (two.mu, two.radius, two.j2),
        (BodyParams::JUPITER.mu, BodyParams::JUPITER.radius, 0.0)
    );
    match c.resolve("saturn") {
        Err(Error::Usage(m)) => assert!(m.contains("jupiter-2body"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn catalog_text_round_trip() {
    let mut c = BodyCatalog::builtin();
    c.insert(
        "earth",
        BodyParams::new(398600.4418, 6378.137, 1.08263e-3).unwrap(),
    );
    assert_eq!(BodyCatalog::parse(&c.to_text(), origin()).unwrap(), c);
}

#[test]
fn catalog_errors_carry_line_numbers() {
    let cases = [
        ("a 1 2\n", 1),
        ("# c\n\nb 1 2 x\n", 3),
        ("a 1 2 0\na 1 2 0\n", 2),
        ("a -1 2 0\n", 1),
    ];
    for (text, line) in cases {
        match BodyCatalog::parse(text, origin()) {
            Err(Error::Format { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn dataset_round_trip_is_exact() {
    let body = BodyParams::JUPITER;
    let ds = generate_dataset(40, 5, &SampleRanges::extended(), &body).unwrap();
    let mut buf = Vec::new();
    write_records(&mut buf, &ds.records).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), columns().join(","));
    assert!(!text.contains('\r'));
    assert_eq!(read_records(buf.as_slice(), origin()).unwrap(), ds.records);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    save_dataset(&p, &ds.records).unwrap();
    assert_eq!(load_dataset(&p).unwrap(), ds.records);
}

#[test]
fn dataset_rejects_bad_input() {
    let header = columns().join(",");
    assert!(matches!(
        read_records("a,b\n".as_bytes(), origin()),
        Err(Error::Format { .. })
    ));
    let row = vec!["1"; columns().len()].join(",");
    let bad = format!("{header}\n{row}\n{}\n", row.replacen('1', "x", 1));
    match read_records(bad.as_bytes(), origin()) {
        Err(Error::Format { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        load_dataset(Path::new("/nonexistent/d.csv")),
        Err(Error::Io { .. })
    ));
}

fn tiny_model() -> (MlpModel, j2lambert_core::mlp::TrainHistory) {
    let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
    let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
    let cfg = MlpConfig::uniform(1, 1, 1, 4, Activation::Identity);
    train(
        &cfg,
        &TrainConfig {
            max_epochs: 5,
            batch_size: 8,
            ..Default::default()
        },
        &x,
        &y,
    )
    .unwrap()
}

#[test]
fn model_and_history_files() {
    let (model, hist) = tiny_model();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.txt");
    save_model(&p, &model).unwrap();
    assert_eq!(load_model(&p).unwrap(), model);

    let mut buf = Vec::new();
    write_history(&mut buf, &hist).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epoch,train_mse,val_mse");
    assert_eq!(lines.len(), 6);
    let last: Vec<&str> = lines[5].split(',').collect();
    assert_eq!(last[0], "4");
    assert_eq!(last[1].parse::<f64>().unwrap(), hist.train_mse[4]);
    assert_eq!(last[2].parse::<f64>().unwrap(), hist.val_mse[4]);
    save_history(&dir.path().join("h.csv"), &hist).unwrap();

    std::fs::write(&p, "not a model").unwrap();
    assert!(matches!(load_model(&p), Err(Error::Model { .. })));
}

#[test]
fn screening_outputs() {
    let body = BodyParams::JUPITER;
    let ds = generate_dataset(300, 2, &SampleRanges::table1(), &body).unwrap();
    let forms = [SampleForm::VCar, SampleForm::Dv2Sph];
    let report = form_screening_report(&ds.records, &forms, body.radius).unwrap();

    let stats = column_stats_csv(&report);
    let rows: usize = forms.iter().map(|f| f.input_dim() + f.output_dim()).sum();
    assert_eq!(stats.lines().count(), 1 + rows);
    let corr = correlation_csv(&report);
    let cells: usize = forms.iter().map(|f| f.input_dim() * f.output_dim()).sum();
    assert_eq!(corr.lines().count(), 1 + cells);
    for line in corr.lines().skip(1) {
        let r: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(r.abs() <= 1.0);
    }
    let rank = ranking_text(&report);
    assert!(rank.lines().last().unwrap().starts_with("selected: "));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("screen");
    save_screening(&out, &report).unwrap();
    for f in ["column_stats.csv", "correlation.csv", "ranking.txt"] {
        assert!(out.join(f).is_file());
    }
}

#[test]
fn settings_sections_and_precedence() {
    let s = Settings::parse(
        "seed = 3\nrevs = [0, 2]\n[gen]\nseed = 9\nout = \"x.csv\"\n",
        origin(),
    )
    .unwrap();
    assert_eq!(s.pick::<u64>(None, "gen", "seed").unwrap(), Some(9));
    assert_eq!(s.pick::<u64>(None, "bench", "seed").unwrap(), Some(3));
    assert_eq!(s.pick(Some(1u64), "gen", "seed").unwrap(), Some(1));
    assert_eq!(s.raw("bench", "revs").as_deref(), Some("0,2"));
    assert_eq!(s.pick::<u64>(None, "bench", "n").unwrap(), None);
    assert!(matches!(
        s.pick::<u64>(None, "gen", "out"),
        Err(Error::Usage(_))
    ));
    match Settings::parse("a = 1\nb = =\n", origin()) {
        Err(Error::Format { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}
