//! CSV and text renderings of scenario reports.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};
use sybil_atsc_core::attack::AttackStrategy;
use sybil_atsc_core::experiment::WeightUpdate;
use sybil_atsc_core::metrics::{improvement_pct, summarize, welch_t, ScenarioReport, Summary};
use sybil_atsc_core::mitigation::MitigationKind;

use crate::error::CliError;

pub const REPORT_HEADER: [&str; 8] =
    ["scenario", "seed", "mean_wait_s", "mean_time_loss_s", "trips", "censored", "policy", "attack"];

fn num(v: f64) -> String {
    format!("{v:.6}")
}

pub fn reports_csv(reports: &[ScenarioReport]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        w.write_record([
            r.scenario.clone(),
            r.seed.to_string(),
            num(r.mean_trip_waiting_time),
            num(r.mean_time_loss),
            r.trips_completed.to_string(),
            r.censored.to_string(),
            r.policy.name().to_string(),
            r.attack.name().to_string(),
        ])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn reports_table(reports: &[ScenarioReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:>6} {:>12} {:>12} {:>7} {:>8} {:>8} {:>13}",
        "scenario", "seed", "wait_s", "loss_s", "trips", "censored", "policy", "attack"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<24} {:>6} {:>12.3} {:>12.3} {:>7} {:>8} {:>8} {:>13}",
            r.scenario,
            r.seed,
            r.mean_trip_waiting_time,
            r.mean_time_loss,
            r.trips_completed,
            r.censored,
            r.policy.name(),
            r.attack.name()
        );
    }
    out
}

pub fn lane_flows_csv(reports: &[ScenarioReport]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "seed", "lane", "flow_vps"])?;
    for r in reports {
        for (lane, flow) in &r.lane_flows {
            w.write_record([r.scenario.clone(), r.seed.to_string(), lane.to_string(), num(*flow)])?;
        }
    }
    finish(w)
}

pub fn weights_csv(rows: &[(String, u64, Vec<WeightUpdate>)]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "seed", "time_s", "lane_index", "weight", "fallback"])?;
    for (label, seed, updates) in rows {
        for u in updates {
            for (i, weight) in u.weights.iter().enumerate() {
                w.write_record([
                    label.clone(),
                    seed.to_string(),
                    num(u.time),
                    i.to_string(),
                    num(*weight),
                    u.fallback.to_string(),
                ])?;
            }
        }
    }
    finish(w)
}

/// Seed-aggregated view of one arm.
#[derive(Debug, Clone)]
pub struct ArmSummary {
    pub label: String,
    pub controller: String,
    pub attack: AttackStrategy,
    pub policy: MitigationKind,
    pub wait: Summary,
    pub loss: Summary,
    pub censored: f64,
}

impl ArmSummary {
    pub fn new(label: &str, controller: &str, reports: &[&ScenarioReport]) -> Self {
        let wait: Vec<f64> = reports.iter().map(|r| r.mean_trip_waiting_time).collect();
        let loss: Vec<f64> = reports.iter().map(|r| r.mean_time_loss).collect();
        let censored = reports.iter().map(|r| r.censored as f64).sum::<f64>() / reports.len().max(1) as f64;
        ArmSummary {
            label: label.to_string(),
            controller: controller.to_string(),
            attack: reports.first().map_or(AttackStrategy::None, |r| r.attack),
            policy: reports.first().map_or(MitigationKind::None, |r| r.policy),
            wait: summarize(&wait),
            loss: summarize(&loss),
            censored,
        }
    }
}

/// `lower` is below `upper` with a two-sided Welch test at 5%.
pub fn significantly_below(lower: &Summary, upper: &Summary) -> Option<bool> {
    let (t, df) = welch_t(lower, upper)?;
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(t > dist.inverse_cdf(0.975))
}

fn find(arms: &[ArmSummary], pred: impl Fn(&ArmSummary) -> bool) -> Option<&ArmSummary> {
    arms.iter().find(|a| pred(a))
}

pub fn summary_text(arms: &[ArmSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:>12} {:>13} {:>8} {:>3} {:>16} {:>16} {:>9}",
        "arm", "controller", "attack", "policy", "n", "wait_s", "loss_s", "censored"
    );
    for a in arms {
        let _ = writeln!(
            out,
            "{:<24} {:>12} {:>13} {:>8} {:>3} {:>8.3} ±{:>6.3} {:>8.3} ±{:>6.3} {:>9.1}",
            a.label,
            a.controller,
            a.attack.name(),
            a.policy.name(),
            a.wait.n,
            a.wait.mean,
            a.wait.std_dev,
            a.loss.mean,
            a.loss.std_dev,
            a.censored
        );
    }

    fn clean(a: &ArmSummary, controller: &str) -> bool {
        a.controller == controller && a.attack == AttackStrategy::None && a.policy == MitigationKind::None
    }
    let baseline = find(arms, |a| clean(a, "fixed"));
    let adaptive = find(arms, |a| clean(a, "adaptive"));
    let attacked = find(arms, |a| a.controller == "adaptive" && a.attack != AttackStrategy::None && a.policy == MitigationKind::None);
    let defended = |p: MitigationKind| {
        attacked.and_then(|att| find(arms, |a| a.controller == "adaptive" && a.attack == att.attack && a.policy == p))
    };
    let fair = defended(MitigationKind::Fair);
    let optimal = defended(MitigationKind::Optimal);

    let _ = writeln!(out, "\ntime-loss improvements (positive = less loss):");
    let pairs = [
        ("adaptive vs baseline", baseline, adaptive),
        ("attack vs adaptive", adaptive, attacked),
        ("fair vs attack", attacked, fair),
        ("optimal vs attack", attacked, optimal),
    ];
    for (name, reference, treated) in pairs {
        let line = match (reference, treated) {
            (Some(r), Some(t)) => match improvement_pct(r.loss.mean, t.loss.mean) {
                Some(p) => format!("{p:+.1}%"),
                None => "n/a (zero reference)".into(),
            },
            _ => "n/a (arm missing)".into(),
        };
        let _ = writeln!(out, "  {name:<22} {line}");
    }

    if let (Some(att), Some(f), Some(o)) = (attacked, fair, optimal) {
        let verdict = |lo: &ArmSummary, hi: &ArmSummary| match significantly_below(&lo.loss, &hi.loss) {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        let _ = writeln!(out, "\nordering (time loss, Welch two-sided 5%):");
        let _ = writeln!(out, "  optimal < fair  {}", verdict(o, f));
        let _ = writeln!(out, "  fair    < none  {}", verdict(f, att));
        let _ = writeln!(out, "  optimal < none  {}", verdict(o, att));
    }
    out
}
