use sybil_atsc::{parse_scenario_str, run_suite, CliError, ScenarioConfig};
use sybil_atsc_core::attack::AttackStrategy;
use sybil_atsc_core::mitigation::MitigationKind;

fn arm(label: &str, body: &str) -> ScenarioConfig {
    let text = format!("label = {label}\n[network]\nfixture = three_junction_reference\n[run]\nhorizon_s = 1200\nseeds = 1-10\n{body}");
    parse_scenario_str(&text, label, label).unwrap()
}

fn five_arms() -> Vec<ScenarioConfig> {
    let attack = "[attack]\nstrategy = game_optimal\n";
    vec![
        arm("a_fixed", "[controller]\nkind = fixed\n"),
        arm("b_adaptive", "[controller]\nkind = adaptive\nswitch_penalty = 0.5\n"),
        arm("c_attack", &format!("[controller]\nkind = adaptive\nswitch_penalty = 0.5\n{attack}")),
        arm("d_fair", &format!("[controller]\nkind = adaptive\nswitch_penalty = 0.5\n{attack}[mitigation]\nkind = fair\n")),
        arm("e_optimal", &format!("[controller]\nkind = adaptive\nswitch_penalty = 0.5\n{attack}[mitigation]\nkind = optimal\n")),
    ]
}

#[test]
fn fifty_rows_in_label_seed_order() {
    let mut arms = five_arms();
    arms.reverse();
    let out = run_suite(&arms, 3).unwrap();
    assert_eq!(out.reports.len(), 50);
    assert!(out.failures.is_empty());
    let keys: Vec<(String, u64)> = out.reports.iter().map(|r| (r.scenario.clone(), r.seed)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(out.csv().unwrap().lines().count(), 51);
    let summary = out.summary();
    for label in ["a_fixed", "e_optimal", "optimal vs attack"] {
        assert!(summary.contains(label), "{summary}");
    }
}

#[test]
fn parallel_output_matches_serial() {
    let arms = five_arms();
    let serial = run_suite(&arms, 1).unwrap();
    let parallel = run_suite(&arms, 8).unwrap();
    assert_eq!(serial.csv().unwrap(), parallel.csv().unwrap());
    assert_eq!(serial.summary(), parallel.summary());
}

#[test]
fn arms_are_wired_as_written() {
    let out = run_suite(&five_arms(), 4).unwrap();
    let arm = |l: &str| out.arms.iter().find(|a| a.label == l).unwrap();
    assert_eq!(arm("a_fixed").controller, "fixed");
    assert_eq!(arm("c_attack").attack, AttackStrategy::GameOptimal);
    assert_eq!(arm("c_attack").policy, MitigationKind::None);
    assert_eq!(arm("d_fair").policy, MitigationKind::Fair);
    assert_eq!(arm("e_optimal").policy, MitigationKind::Optimal);
    let logged = out.weights.iter().filter(|(l, _, w)| l == "e_optimal" && !w.is_empty()).count();
    assert_eq!(logged, 10);
}

#[test]
fn empty_and_duplicate_suites_are_usage_errors() {
    assert!(matches!(run_suite(&[], 2), Err(CliError::Usage(_))));
    let a = arm("same", "[controller]\nkind = fixed\n");
    let err = run_suite(&[a.clone(), a], 2).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn outputs_written_to_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_suite(&five_arms()[..2], 2).unwrap();
    out.write_to(dir.path()).unwrap();
    for f in ["report.csv", "summary.txt", "lane_flows.csv", "weights.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.starts_with("scenario,seed,mean_wait_s,mean_time_loss_s,trips,censored,policy,attack"));
}
