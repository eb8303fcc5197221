use persp_core::manifest::{Budget, Manifest};
use persp_core::report::Status;
use persp_core::verify;

#[test]
fn tiny_budget_has_no_failures() {
    let resolved = Manifest::default().resolve().unwrap();
    let (report, timings) = verify::run(&resolved, Budget::Tiny, "all").unwrap();
    assert_eq!(report.suites.len(), verify::suites().len());
    assert_eq!(timings.len(), report.suites.len());
    let failed: Vec<_> = report.suites.iter().filter(|s| s.status != Status::Pass).collect();
    assert!(failed.is_empty(), "{}", serde_json::to_string_pretty(&failed).unwrap());
}

#[test]
fn reports_do_not_depend_on_selection_order() {
    let resolved = Manifest::default().resolve().unwrap();
    let (a, _) = verify::run(&resolved, Budget::Tiny, "topology-count,glue-topology").unwrap();
    let (b, _) = verify::run(&resolved, Budget::Tiny, "glue-topology,topology-count").unwrap();
    assert_eq!(a.suites, b.suites);
}

#[test]
fn a_different_seed_changes_sampled_suites_only() {
    let mut m = Manifest::default();
    let resolved = m.resolve().unwrap();
    let (a, _) = verify::run(&resolved, Budget::Tiny, "topology-count").unwrap();
    m.seed += 1;
    let resolved = m.resolve().unwrap();
    let (b, _) = verify::run(&resolved, Budget::Tiny, "topology-count").unwrap();
    assert_eq!(a.suites, b.suites);
    assert_ne!(a.seed, b.seed);
}
