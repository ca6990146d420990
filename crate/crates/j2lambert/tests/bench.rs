use std::collections::HashSet;
use std::f64::consts::PI;

use j2lambert::bench::*;
use j2lambert::Error;
use j2lambert_core::rng::derive_seed;
use j2lambert_core::sample::sample_seed;
use j2lambert_core::BodyParams;
use proptest::prelude::*;

fn row(method: Method, revs: u32, x: f64) -> BenchRow {
    BenchRow {
        method,
        revs,
        n: 100,
        converged: 97,
        ratio: 0.97,
        mean_iters: x,
        mean_time_s: x * 1e-3,
        mean_err_km: x * 1e-5,
    }
}

#[test]
fn report_csv_round_trip() {
    let report = BenchReport {
        rows: vec![row(Method::Sn, 0, 2.5), row(Method::Dnn, 3, 1.0 / 3.0)],
        seed: 42,
        note: "first line\nsecond line".into(),
    };
    let csv = report.to_csv();
    assert!(csv
        .lines()
        .any(|l| l == "method,revs,n,converged,ratio,mean_iters,mean_time_s,mean_err_km"));
    assert_eq!(BenchReport::from_csv(&csv).unwrap(), report);

    let mut nan = report.clone();
    nan.rows[0].mean_iters = f64::NAN;
    assert!(BenchReport::from_csv(&nan.to_csv()).unwrap().rows[0]
        .mean_iters
        .is_nan());

    assert!(BenchReport::from_csv("method,revs\n").is_err());
    assert!(BenchReport::from_csv(&csv.replace("DNN", "XYZ")).is_err());
}

proptest! {
    #[test]
    fn report_rows_survive_csv(
        seed in any::<u64>(),
        cells in proptest::collection::vec((0u32..12, 1usize..1000, -1e300f64..1e300, 0.0f64..1.0), 0..8),
    ) {
        let rows: Vec<BenchRow> = cells
            .iter()
            .map(|&(revs, n, x, ratio)| BenchRow { ratio, n, converged: n / 2, ..row(Method::Dnn, revs, x) })
            .collect();
        let report = BenchReport { rows, seed, note: String::new() };
        prop_assert_eq!(BenchReport::from_csv(&report.to_csv()).unwrap(), report);
    }

    #[test]
    fn crossover_is_the_smallest_winning_batch(
        one in 0.0f64..1e4, sn in 1e-5f64..1.0, frac in 0.0f64..1.5,
    ) {
        let dnn = sn * frac;
        let cost = OneTimeCost { generation_s: one * 0.3, training_s: one * 0.7 };
        match crossover_batch(&cost, sn, dnn) {
            None => prop_assert!(dnn >= sn),
            Some(b) => {
                let wins = |b: u64| cost.total() + b as f64 * dnn < b as f64 * sn;
                prop_assert!(wins(b));
                prop_assert!(b == 1 || !wins(b - 1));
            }
        }
    }
}

#[test]
fn total_cost_identities() {
    let one = OneTimeCost {
        generation_s: 9.0,
        training_s: 240.0,
    };
    let (sn, dnn) = (2e-3, 1e-3);
    let r = TotalCostReport::from_per_solve(&[1, 10, 20, 1000], one, sn, dnn);
    assert!(r.rows[0].one_time_share > 0.99);
    assert_eq!(
        r.rows[2].amortized_one_time_s * 2.0,
        r.rows[1].amortized_one_time_s
    );
    for row in &r.rows {
        assert_eq!(row.sn_total_s, row.batch as f64 * sn);
        assert_eq!(row.dnn_total_s, one.total() + row.batch as f64 * dnn);
        assert_eq!(row.one_time_share, one.total() / row.dnn_total_s);
    }
    assert_eq!(r.crossover, Some(249_001));
    let csv = r.to_csv();
    assert!(csv.contains("# crossover: 249001"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert_eq!(crossover_batch(&one, dnn, sn), None);
}

#[test]
fn stress_geometry_is_exact() {
    let body = BodyParams::JUPITER;
    for angle in [StressAngle::Half, StressAngle::Full] {
        for revs in 0..4 {
            for c in stress_cases(3, angle, revs, 25, &body).unwrap() {
                let sep = separation(&c.r0, &c.rf);
                match angle {
                    StressAngle::Half => assert!((sep - PI).abs() < 1e-9, "{sep}"),
                    StressAngle::Full => {
                        assert!(sep.abs() < 1e-9);
                        assert_eq!(c.r0, c.rf);
                    }
                }
                assert_eq!(c.revs, revs);
                assert!(c.hint.dot(&c.r0).abs() < 1e-9 * c.r0.norm());
                let n = c.hint.normalize();
                assert!(
                    n.z.abs() > 1.0 - 1e-12 || n.z.abs() < 1e-12,
                    "plane not J2-invariant: {n:?}"
                );
                assert!(c.tof > 0.0);
            }
        }
    }
}

#[test]
fn streams_are_seed_disjoint() {
    let streams = [
        Stream::Convergence,
        Stream::Stress180,
        Stream::Stress360,
        Stream::TotalCost,
    ];
    let mut bench = HashSet::new();
    for seed in 0..4 {
        for s in streams {
            for revs in 0..11 {
                assert!(bench.insert(bench_seed(seed, s, revs)));
            }
        }
    }
    // Per-sample seeds of benchmark sets against those of training sets keyed
    // by small user seeds, 50000 samples each.
    let mut bench_samples = HashSet::new();
    for &b in &bench {
        for i in 0..200 {
            bench_samples.insert(sample_seed(b, i));
            bench_samples.insert(derive_seed(b, i));
        }
    }
    for seed in 0..4u64 {
        assert!(!bench.contains(&seed));
        for i in 0..50_000 {
            assert!(!bench_samples.contains(&sample_seed(seed, i)));
        }
    }
}

#[test]
fn dnn_needs_a_model() {
    let cfg = BenchConfig {
        samples_per_rev: 1,
        rev_counts: vec![0],
        ..Default::default()
    };
    assert!(matches!(
        run_convergence_bench(&cfg, None, &BodyParams::JUPITER),
        Err(Error::Usage(_))
    ));
    assert!(matches!(
        run_stress_bench(StressAngle::Full, &cfg, None, &BodyParams::JUPITER),
        Err(Error::Usage(_))
    ));
    let bad = BenchConfig {
        samples_per_rev: 0,
        ..cfg
    };
    assert!(bad.validate().is_err());
}

#[test]
fn convergence_report_is_deterministic_apart_from_time() {
    let cfg = BenchConfig {
        samples_per_rev: 5,
        rev_counts: vec![0, 2],
        methods: vec![Method::Sn],
        seed: 8,
        ..Default::default()
    };
    let strip = |r: BenchReport| {
        r.rows
            .into_iter()
            .map(|row| BenchRow {
                mean_time_s: 0.0,
                ..row
            })
            .collect::<Vec<_>>()
    };
    let a = run_convergence_bench(&cfg, None, &BodyParams::JUPITER).unwrap();
    assert_eq!(a.rows.len(), 2);
    for row in &a.rows {
        assert!((0.0..=1.0).contains(&row.ratio));
        assert_eq!(row.n, 5);
        assert!(row.mean_time_s > 0.0);
    }
    let b = run_convergence_bench(&cfg, None, &BodyParams::JUPITER).unwrap();
    assert_eq!(strip(a), strip(b));
}

#[test]
fn two_body_stress_cases_need_no_correction() {
    let body = BodyParams {
        j2: 0.0,
        ..BodyParams::JUPITER
    };
    let cfg = BenchConfig {
        samples_per_rev: 5,
        rev_counts: vec![0, 1],
        methods: vec![Method::Sn],
        ..Default::default()
    };
    for angle in [StressAngle::Half, StressAngle::Full] {
        let r = run_stress_bench(angle, &cfg, None, &body).unwrap();
        for row in &r.rows {
            assert_eq!(row.ratio, 1.0);
            assert_eq!(row.mean_iters, 0.0);
        }
    }
}
