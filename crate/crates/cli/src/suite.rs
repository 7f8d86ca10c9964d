//! Running arms over seeds, one world per job.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sybil_atsc_core::experiment::{run_experiment, ExperimentConfig, WeightUpdate};
use sybil_atsc_core::metrics::ScenarioReport;

use crate::error::CliError;
use crate::report::{lane_flows_csv, reports_csv, summary_text, weights_csv, ArmSummary};
use crate::scenario::{parse_scenario, ScenarioConfig};

pub const SCENARIO_EXTENSION: &str = "scenario";

#[derive(Debug, Clone)]
pub struct SuiteOutput {
    /// Sorted by (arm label, seed).
    pub reports: Vec<ScenarioReport>,
    pub arms: Vec<ArmSummary>,
    pub weights: Vec<(String, u64, Vec<WeightUpdate>)>,
    /// One line per failed (arm, seed).
    pub failures: Vec<String>,
}

impl SuiteOutput {
    pub fn csv(&self) -> Result<String, CliError> {
        reports_csv(&self.reports)
    }

    pub fn summary(&self) -> String {
        summary_text(&self.arms)
    }

    pub fn into_result(self) -> Result<SuiteOutput, CliError> {
        if self.failures.is_empty() {
            Ok(self)
        } else {
            Err(CliError::ArmFailures { total: self.reports.len() + self.failures.len(), failed: self.failures })
        }
    }

    /// Write `report.csv`, `summary.txt`, `lane_flows.csv` and `weights.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        let io = |path: PathBuf| move |source| CliError::Io { path: path.display().to_string(), source };
        fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
        let files = [
            ("report.csv", self.csv()?),
            ("summary.txt", self.summary()),
            ("lane_flows.csv", lane_flows_csv(&self.reports)?),
            ("weights.csv", weights_csv(&self.weights)?),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(io(path.clone()))?;
        }
        Ok(())
    }
}

/// Every `*.scenario` file in `dir`, in file-name order.
pub fn load_suite(dir: &Path) -> Result<Vec<ScenarioConfig>, CliError> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == SCENARIO_EXTENSION))
        .collect();
    paths.sort();
    paths.iter().map(|p| parse_scenario(p)).collect()
}

/// Run one scenario over its seeds, sequentially.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<ScenarioReport>, CliError> {
    let exp = config.experiment();
    config
        .seeds
        .iter()
        .map(|&seed| {
            run_experiment(&exp, seed)
                .map(|o| o.report)
                .map_err(|source| CliError::Run { label: config.label.clone(), seed, source })
        })
        .collect()
}

/// Fan `(arm, seed)` jobs out to `parallelism` workers and merge in
/// (label, seed) order.
pub fn run_suite(configs: &[ScenarioConfig], parallelism: usize) -> Result<SuiteOutput, CliError> {
    if configs.is_empty() {
        return Err(CliError::Usage("suite needs at least one scenario".into()));
    }
    let mut labels = BTreeSet::new();
    for c in configs {
        if !labels.insert(c.label.as_str()) {
            return Err(CliError::Usage(format!("duplicate scenario label `{}`", c.label)));
        }
    }

    let experiments: Vec<ExperimentConfig> = configs.iter().map(ScenarioConfig::experiment).collect();
    let jobs: Vec<(usize, u64)> =
        configs.iter().enumerate().flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s))).collect();
    let results = Mutex::new(Vec::with_capacity(jobs.len()));
    let next = AtomicUsize::new(0);
    let workers = parallelism.clamp(1, jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(arm, seed)) = jobs.get(k) else { break };
                let outcome = run_experiment(&experiments[arm], seed);
                results.lock().expect("no worker panicked holding the lock").push((arm, seed, outcome));
            });
        }
    });

    let mut results = results.into_inner().expect("workers joined");
    results.sort_by(|a, b| configs[a.0].label.cmp(&configs[b.0].label).then(a.1.cmp(&b.1)));

    let mut reports = Vec::new();
    let mut weights = Vec::new();
    let mut failures = Vec::new();
    for (arm, seed, outcome) in results {
        match outcome {
            Ok(out) => {
                weights.push((configs[arm].label.clone(), seed, out.weights));
                reports.push(out.report);
            }
            Err(e) => failures.push(format!("{} seed {seed}: {e}", configs[arm].label)),
        }
    }

    let mut order: Vec<&ScenarioConfig> = configs.iter().collect();
    order.sort_by(|a, b| a.label.cmp(&b.label));
    let arms = order
        .iter()
        .filter_map(|c| {
            let own: Vec<&ScenarioReport> = reports.iter().filter(|r| r.scenario == c.label).collect();
            (!own.is_empty()).then(|| ArmSummary::new(&c.label, c.controller.name(), &own))
        })
        .collect();
    Ok(SuiteOutput { reports, arms, weights, failures })
}
