use pcrlab::harness::calibration::{base_config, classical_config, strong_spiked};
use pcrlab::harness::{emit, read_csv, read_jsonl, run_sweep, table, verify, CheckStatus, DGrid, ExperimentConfig, FTrue, OutputFormat, Suite};
use pcrlab::numeric::ls_slope;
use pcrlab::SpectrumSpec;

fn small(d: DGrid, replicates: usize) -> ExperimentConfig {
    base_config(
        SpectrumSpec::Polynomial { alpha: 2.0, p: 30 },
        vec![40],
        d,
        FTrue::Flat,
        0.5,
        replicates,
        17,
    )
}

fn csv_bytes(cfg: &ExperimentConfig) -> Vec<u8> {
    let table = run_sweep(cfg).unwrap();
    let mut buf = Vec::new();
    table::write_csv(&table.rows, &mut buf).unwrap();
    buf
}

#[test]
fn one_row_per_replicate_and_level() {
    let table = run_sweep(&small(DGrid::List(vec![2, 5]), 2)).unwrap();
    assert_eq!(table.rows.len(), 4);
    let keys: Vec<(usize, usize)> = table.rows.iter().map(|r| (r.replicate, r.d)).collect();
    assert_eq!(keys, vec![(0, 2), (0, 5), (1, 2), (1, 5)]);
    for r in &table.rows {
        assert_eq!(r.family, "polynomial");
        let (b, v, t) = (r.bias_sq.unwrap(), r.variance.unwrap(), r.total.unwrap());
        assert!((b + v - t).abs() <= 1e-14 * t);
        assert!(r.oracle_total.is_some());
    }
    assert_eq!(table.summary.len(), 2);
    assert!(table.summary.iter().all(|s| s.count == 2));
}

#[test]
fn output_is_byte_identical_across_runs_and_workers() {
    let mut cfg = small(DGrid::Auto, 4);
    cfg.n = vec![20, 40];
    let a = csv_bytes(&cfg);
    let b = csv_bytes(&cfg);
    cfg.workers = Some(3);
    let c = csv_bytes(&cfg);
    assert_eq!(a, b);
    assert_eq!(a, c);
    cfg.seed += 1;
    assert_ne!(a, csv_bytes(&cfg));
}

#[test]
fn files_round_trip_in_both_formats() {
    let table = run_sweep(&small(DGrid::List(vec![0, 3, 40]), 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("rows.csv");
    emit(&table.rows, OutputFormat::Csv, &csv_path).unwrap();
    let back = read_csv(std::fs::File::open(&csv_path).unwrap()).unwrap();
    assert_eq!(back, table.rows);
    let json_path = dir.path().join("rows.jsonl");
    emit(&table.rows, OutputFormat::Json, &json_path).unwrap();
    let back = read_jsonl(std::io::BufReader::new(std::fs::File::open(&json_path).unwrap())).unwrap();
    assert_eq!(back, table.rows);
}

#[test]
fn out_of_range_levels_are_rows_with_reasons() {
    let table = run_sweep(&small(DGrid::List(vec![3, 31]), 1)).unwrap();
    let bad = table.rows.iter().find(|r| r.d == 31).unwrap();
    assert!(bad.total.is_none());
    assert!(bad.reason.contains("d_out_of_range"));
    let good = table.rows.iter().find(|r| r.d == 3).unwrap();
    assert!(good.total.is_some());
}

#[test]
fn rank_deficient_levels_do_not_abort_the_sweep() {
    let mut cfg = small(DGrid::List(vec![2, 5]), 2);
    cfg.spectrum = SpectrumSpec::Explicit {
        values: vec![3.0, 2.0, 1.0, 0.0, 0.0, 0.0],
    };
    cfg.n = vec![10];
    let table = run_sweep(&cfg).unwrap();
    assert_eq!(table.rows.len(), 4);
    for r in &table.rows {
        if r.d == 5 {
            assert!(r.total.is_none());
            assert!(r.reason.contains("pcr_rank_deficient"), "{}", r.reason);
            assert!(r.reason.contains("oracle_rank_deficient"), "{}", r.reason);
        } else {
            assert!(r.total.unwrap().is_finite());
        }
    }
}

#[test]
fn min_norm_column_only_at_d_equal_n() {
    let mut cfg = base_config(strong_spiked(), vec![30], DGrid::List(vec![10, 30]), FTrue::UnitFirst, 1.0, 1, 4);
    cfg.spectrum = SpectrumSpec::Spiked {
        spikes: vec![50.0],
        bulk: 1.0,
        p: 200,
    };
    let table = run_sweep(&cfg).unwrap();
    let at_n = table.rows.iter().find(|r| r.d == 30).unwrap();
    let mn = at_n.min_norm_total.unwrap();
    assert!((mn - at_n.total.unwrap()).abs() <= 1e-8 * mn);
    let below = table.rows.iter().find(|r| r.d == 10).unwrap();
    assert!(below.min_norm_total.is_none());
    assert!(below.reason.contains("min_norm_only_at_d_eq_n"));
}

#[test]
fn classical_sweep_decays_at_the_expected_rate() {
    let table = run_sweep(&classical_config(vec![200, 400, 800, 1600], 8, 99)).unwrap();
    let x: Vec<f64> = table.summary.iter().map(|s| (s.n as f64).ln()).collect();
    let y: Vec<f64> = table.summary.iter().map(|s| s.median_total.unwrap().ln()).collect();
    let slope = ls_slope(&x, &y);
    assert!((-0.9..=-0.45).contains(&slope), "slope {slope}");
}

#[test]
fn identities_suite_passes() {
    let mut cfg = small(DGrid::All, 3);
    cfg.n = vec![10, 30, 60];
    cfg.rotation_seed = Some(5);
    let report = verify(&cfg, Suite::Identities).unwrap();
    assert!(report.pass, "{}", report.to_json());
    assert!(report.condition_met);
    assert!(report.checks.iter().any(|c| c.name == "min_norm_equals_pcr_at_n" && c.status == CheckStatus::Pass));
}

#[test]
fn highdim_suite_passes_on_strong_spikes() {
    let cfg = base_config(strong_spiked(), vec![100], DGrid::List(vec![100]), FTrue::UnitFirst, 1.0, 20, 2024);
    let report = verify(&cfg, Suite::Highdim).unwrap();
    assert!(report.pass, "{}", report.to_json());
    assert!(report.checks.iter().all(|c| c.status == CheckStatus::Pass));
}

#[test]
fn highdim_suite_skips_when_no_j_star() {
    let cfg = base_config(SpectrumSpec::Exponential { alpha: 1.0, p: 30 }, vec![100], DGrid::List(vec![10]), FTrue::Flat, 1.0, 3, 1);
    let report = verify(&cfg, Suite::Highdim).unwrap();
    assert!(report.pass);
    assert!(!report.condition_met);
}

#[test]
fn classical_suite_skips_levels_violating_its_condition() {
    let cfg = classical_config(vec![20], 3, 8);
    let mut cfg = cfg;
    cfg.d = DGrid::List(vec![10]);
    let report = verify(&cfg, Suite::Classical).unwrap();
    assert!(report.pass);
    assert!(!report.condition_met);
    assert!(report.checks.iter().all(|c| c.status == CheckStatus::Skipped));
}

#[test]
fn classical_suite_flags_a_missed_signal() {
    let mut f = vec![0.0; 10];
    f[3] = 10.0;
    let cfg = base_config(SpectrumSpec::Polynomial { alpha: 2.0, p: 10 }, vec![200], DGrid::List(vec![3]), FTrue::Explicit(f), 0.0, 10, 1);
    let report = verify(&cfg, Suite::Classical).unwrap();
    assert!(!report.pass);
}

#[test]
fn concentration_suite_passes_in_square_and_root_n_modes() {
    let mut cfg = small(DGrid::List(vec![1]), 100);
    cfg.n = vec![100, 1000];
    let report = verify(&cfg, Suite::Concentration).unwrap();
    assert!(report.pass, "{}", report.to_json());
}

#[test]
fn unknown_suite_is_rejected() {
    assert!("nonsense".parse::<Suite>().is_err());
    assert_eq!("highdim".parse::<Suite>().unwrap(), Suite::Highdim);
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::from_path(&path).unwrap();
        cfg.validate().unwrap();
        cfg.build_spectrum().unwrap();
        count += 1;
    }
    assert!(count >= 4);
}
