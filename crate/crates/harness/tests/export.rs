use sithpft_harness::export::sidecar_path;
use sithpft_harness::{export_report, load_report, run_experiment, ExperimentSpec, Row, RunOptions, RunReport};

fn small_report(verify: bool) -> RunReport {
    let spec =
        ExperimentSpec { rows: vec![Row(8, 4, 20)], sessions: 3, repetitions: 2, seed: 5, ..ExperimentSpec::default() };
    run_experiment(&spec, &RunOptions { verify, ..RunOptions::default() }).unwrap()
}

fn csv_lines(path: &std::path::Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn empty_report_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    export_report(&RunReport::default(), &path).unwrap();
    assert_eq!(csv_lines(&path), vec!["config,algorithm,mean_time_s,stderr_s,consistent,speedup"]);
    assert_eq!(load_report(sidecar_path(&path)).unwrap(), RunReport::default());
}

#[test]
fn one_row_gives_two_lines_and_round_trips() {
    let report = small_report(true);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    export_report(&report, &path).unwrap();
    let lines = csv_lines(&path);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("\"(8, 4, 20)\",pft-dpw,") && lines[1].ends_with(",true,1"), "{}", lines[1]);
    assert!(lines[2].starts_with("\"(8, 4, 20)\",sith-pft,"), "{}", lines[2]);
    assert_eq!(load_report(sidecar_path(&path)).unwrap(), report);
}

#[test]
fn unverified_runs_are_marked() {
    let report = small_report(false);
    assert_eq!(report.rows[0].consistent, None);
    assert!(report.rows[0].sessions.iter().all(|s| s.consistent.is_none()));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    export_report(&report, &path).unwrap();
    assert!(csv_lines(&path)[1].contains(",unverified,"));
}

#[test]
fn report_shape() {
    let report = small_report(true);
    let row = &report.rows[0];
    assert_eq!(row.repetitions, 2);
    assert_eq!(row.sessions.len(), 6);
    assert!(row.baseline.mean_s > 0.0 && row.sith.mean_s > 0.0);
    assert!((row.speedup - row.baseline.mean_s / row.sith.mean_s).abs() < 1e-12);
    assert_eq!(row.consistent, Some(true));
}

#[test]
fn unwritable_path_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("report.csv");
    assert!(export_report(&RunReport::default(), path).is_err());
}

#[test]
fn runs_are_reproducible() {
    let a = small_report(true);
    let b = small_report(true);
    let digests = |r: &RunReport| -> Vec<(String, usize)> {
        r.rows[0].sessions.iter().map(|s| (s.tree_digest.clone(), s.sith_action)).collect()
    };
    assert_eq!(digests(&a), digests(&b));
}
