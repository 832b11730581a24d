use corrugated_core::study::{compute_study, emit_report, parse_config, StudyError};
use std::fs;

const SMALL: &str = r#"
alpha = 4.0
beta = 0.0
eps = [0.25, 0.125, 0.0625]
mesh_h = 0.0625
sigma0_h = 0.0625
lambda = 15.0
sigma0_refinements = 0
"#;

#[test]
fn parallel_and_serial_studies_write_identical_files() {
    let cfg = parse_config(SMALL).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, jobs) in dirs.iter().zip([Some(1), Some(3)]) {
        let outcome = compute_study(&cfg, jobs).unwrap();
        emit_report(&outcome, dir.path()).unwrap();
    }
    let mut names: Vec<_> = fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 10);
    for name in names {
        let a = fs::read(dirs[0].path().join(&name)).unwrap();
        let b = fs::read(dirs[1].path().join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
}

#[test]
fn courant_hilbert_study_reports_the_q_operator() {
    let outcome = compute_study(&parse_config(SMALL).unwrap(), None).unwrap();
    assert_eq!(outcome.report.limit_operator, "A_q");
    assert_eq!(outcome.report.rows.len(), 3);
    for (row, res) in outcome.report.rows.iter().zip(&outcome.results) {
        assert_eq!(row.eigenvalue_count, res.spectrum.total_count());
        assert_eq!(row.certified_count, row.eigenvalue_count);
        let t = row.threshold.as_ref().expect("q < ∞ runs the threshold check");
        assert!(t.checked > 0);
    }
}

#[test]
fn emitting_an_empty_study_fails() {
    let mut outcome = compute_study(&parse_config(SMALL).unwrap(), None).unwrap();
    outcome.results.clear();
    outcome.report.rows.clear();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_report(&outcome, dir.path()), Err(StudyError::EmptyStudy)));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn study_without_eps_values_is_rejected() {
    let mut cfg = parse_config(SMALL).unwrap();
    cfg.params.clear();
    cfg.mesh_h.clear();
    assert!(matches!(compute_study(&cfg, None), Err(StudyError::EmptyStudy)));
}
