//! Library-level runs of the canned experiments.

use kspde::harness::{canonical_config, list_experiments, run_experiment, run_resolved, ExperimentConfig};

#[test]
fn deterministic_contraction_has_no_gap_growth() {
    let dir = tempfile::tempdir().unwrap();
    let config = canonical_config("contraction").unwrap();
    assert_eq!(config.members, 8);
    assert!(config.noise.alpha.is_empty());
    let record = run_resolved(&config, dir.path()).unwrap();
    assert!(record.pass());
    let growth = &record.report.checks[0];
    assert_eq!(growth.name, "max-mean-gap-growth");
    assert!(growth.measured <= 0.0, "{}", growth.measured);
    assert_eq!(record.seeds, (0..8).collect::<Vec<u64>>());
}

#[test]
fn regularity_report_carries_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let record = run_experiment("regularity-burgers", &ExperimentConfig::default(), Some(dir.path())).unwrap();
    let s = record.report.checks.iter().find(|c| c.name == "s-emp").unwrap();
    assert!((s.bound / 0.9 - 1.0 / 18.0).abs() < 1e-15);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("regularity.json")).unwrap()).unwrap();
    assert!(report["s_emp"].is_number());
    assert!((report["predicted_s"].as_f64().unwrap() - 1.0 / 18.0).abs() < 1e-15);
}

#[test]
fn reruns_reproduce_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let config = canonical_config("vanishing-viscosity-cauchy").unwrap();
    let a = run_resolved(&config, &dir.path().join("a")).unwrap();
    let b = run_resolved(&config, &dir.path().join("b")).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.seeds, b.seeds);
    assert_eq!(a.config_hash, b.config_hash);
    let names = |r: &kspde::harness::RunRecord| -> Vec<_> { r.outputs.iter().map(|p| p.file_name().unwrap().to_owned()).collect() };
    assert_eq!(names(&a), names(&b));
}

#[test]
fn every_canonical_config_round_trips_through_json() {
    for e in list_experiments() {
        let c = canonical_config(e.name).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let file = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.clone().overlay(&file).unwrap(), c, "{}", e.name);
    }
}
