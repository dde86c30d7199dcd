use nestpart_core::hetsim::{compare_strategies, simulate, validate_model, SimScenario, Strategy};
use nestpart_core::report::build_report;

const SCENARIO: &str = r#"{
  "mesh": {"trees": [{"origin": [0, 0, 0], "material_id": 0}, {"origin": [1, 0, 0], "material_id": 0}], "level": 2, "element_size": 1.0},
  "N": 4,
  "steps": 3,
  "table": TABLE,
  "partition": {"kind": "ratio", "nodes": 2, "ratio": 1.5},
  "profiles": [{"name": "fast", "default_factor": 0.5, "transfer": {"alpha": 1e-5, "beta": 1e-10}}],
  "network": {"alpha": 2e-6, "beta": 2e-10}
}"#;

const TABLE: &str = r#"{"entries": [
  {"kernel": "volume_loop", "N": 4, "device": "host", "a": 0.0001, "b": 2e-05, "r2": 1.0},
  {"kernel": "int_flux", "N": 4, "device": "host", "a": 2e-05, "b": 4e-06, "r2": 1.0},
  {"kernel": "interp_q", "N": 4, "device": "host", "a": 1e-05, "b": 3e-06, "r2": 1.0},
  {"kernel": "lift", "N": 4, "device": "host", "a": 1e-05, "b": 5e-06, "r2": 1.0},
  {"kernel": "rk", "N": 4, "device": "host", "a": 0.0, "b": 2e-06, "r2": 1.0},
  {"kernel": "bound_flux", "N": 4, "device": "host", "a": 1e-06, "b": 1e-06, "r2": 1.0},
  {"kernel": "parallel_flux", "N": 4, "device": "host", "a": 0.0, "b": 1e-06, "r2": 1.0}
], "transfer": {"alpha": 1e-5, "beta": 1e-10}}"#;

fn scenario() -> SimScenario {
    SimScenario::from_json(&SCENARIO.replace("TABLE", TABLE)).unwrap()
}

#[test]
fn scenario_to_report_matches_golden() {
    let s = scenario();
    let trace = simulate(&s).unwrap();
    validate_model(&trace, &s).unwrap();
    let cmp = compare_strategies(&s, &Strategy::ALL).unwrap();
    let report = build_report(&[("cmp.csv".into(), cmp.to_csv())], &[("trace.csv".into(), trace.to_csv())]).unwrap();
    let golden = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/report_golden.md");
    if std::env::var_os("NESTPART_BLESS").is_some() {
        std::fs::write(golden, report.to_markdown()).unwrap();
    }
    assert_eq!(report.to_markdown(), std::fs::read_to_string(golden).unwrap());
}

#[test]
fn nested_speedup_is_consistent_with_step_times() {
    let cmp = compare_strategies(&scenario(), &Strategy::ALL).unwrap();
    let base = cmp.get(Strategy::OffloadNone).unwrap();
    for r in &cmp.results {
        assert!((r.speedup - base.total_time / r.total_time).abs() < 1e-12);
    }
    assert!(cmp.get(Strategy::Nested).unwrap().speedup > 1.0);
}
