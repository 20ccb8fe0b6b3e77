//! Experiment manifests: a small DAG of CLI stages executed in order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::report::{write_json, ReportMeta};
use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub id: String,
    pub command: String,
    #[serde(default)]
    pub args: BTreeMap<String, Value>,
    /// Explicit seed; otherwise derived from the manifest seed and the stage position.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub depends_on: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    #[serde(default)]
    pub toolkit_version: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Named directories substituted into string arguments as `${name}`.
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
    #[serde(default)]
    pub stages: Vec<Stage>,
}

/// Executes one resolved stage. Implemented by the command-line front end.
pub trait StageRunner {
    /// Argument keys accepted by `command`, or `None` if the command is unknown.
    fn known_keys(&self, command: &str) -> Option<Vec<String>>;
    fn run(&self, command: &str, args: &BTreeMap<String, Value>, seed: u64) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub id: String,
    pub command: String,
    pub status: StageStatus,
    pub seed: u64,
    pub args: BTreeMap<String, Value>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub meta: ReportMeta,
    pub success: bool,
    pub stages: Vec<StageOutcome>,
}

impl ExperimentManifest {
    /// Stage indices in dependency order; independent stages keep declaration order.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut index = BTreeMap::new();
        for (i, s) in self.stages.iter().enumerate() {
            if index.insert(s.id.as_str(), i).is_some() {
                return Err(Error::Manifest(format!("duplicate stage id {:?}", s.id)));
            }
        }
        let mut indegree = vec![0usize; self.stages.len()];
        let mut dependents = vec![Vec::new(); self.stages.len()];
        for (i, s) in self.stages.iter().enumerate() {
            for d in &s.depends_on {
                let &j = index.get(d.as_str()).ok_or_else(|| Error::Manifest(format!("stage {:?} depends on unknown stage {d:?}", s.id)))?;
                indegree[i] += 1;
                dependents[j].push(i);
            }
        }
        let mut ready: BTreeSet<usize> = (0..self.stages.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.stages.len());
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &j in &dependents[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        if order.len() != self.stages.len() {
            let stuck: Vec<&str> = (0..self.stages.len()).filter(|i| !order.contains(i)).map(|i| self.stages[i].id.as_str()).collect();
            return Err(Error::Manifest(format!("dependency cycle among stages {}", stuck.join(", "))));
        }
        Ok(order)
    }

    pub fn validate(&self, runner: &dyn StageRunner) -> Result<Vec<usize>> {
        let order = self.topological_order()?;
        for s in &self.stages {
            let keys = runner.known_keys(&s.command).ok_or_else(|| Error::Manifest(format!("stage {:?}: unknown command {:?}", s.id, s.command)))?;
            if let Some(k) = s.args.keys().find(|k| !keys.contains(k)) {
                return Err(Error::Manifest(format!("stage {:?}: unknown key {k:?} for {}", s.id, s.command)));
            }
        }
        Ok(order)
    }

    fn substitute(&self, v: &Value) -> Value {
        match v {
            Value::String(s) => {
                let mut out = s.clone();
                for (k, dir) in &self.bindings {
                    out = out.replace(&format!("${{{k}}}"), dir);
                }
                Value::String(out)
            }
            Value::Array(a) => Value::Array(a.iter().map(|x| self.substitute(x)).collect()),
            other => other.clone(),
        }
    }

    fn resolve(&self, i: usize) -> (BTreeMap<String, Value>, u64) {
        let s = &self.stages[i];
        let args = s.args.iter().map(|(k, v)| (k.clone(), self.substitute(v))).collect();
        (args, s.seed.unwrap_or_else(|| seed::derive(self.seed, i as u64)))
    }
}

/// Runs the stages in dependency order. The first failure stops the run and
/// marks every later stage as skipped. With a non-empty stage list the run
/// report is written to `report_path`.
pub fn run_manifest(m: &ExperimentManifest, runner: &dyn StageRunner, report_path: &Path) -> Result<RunReport> {
    let order = m.validate(runner)?;
    let mut outcomes = Vec::with_capacity(order.len());
    let mut failed = false;
    for i in order {
        let (args, stage_seed) = m.resolve(i);
        let s = &m.stages[i];
        let (status, error) = if failed {
            (StageStatus::Skipped, None)
        } else {
            match runner.run(&s.command, &args, stage_seed) {
                Ok(()) => (StageStatus::Completed, None),
                Err(e) => {
                    failed = true;
                    (StageStatus::Failed, Some(format!("kind={} msg={e}", e.kind())))
                }
            }
        };
        outcomes.push(StageOutcome { id: s.id.clone(), command: s.command.clone(), status, seed: stage_seed, args, error });
    }
    let config = serde_json::to_value(m)?;
    let report = RunReport { meta: ReportMeta::new(m.seed, config), success: !failed, stages: outcomes };
    if !report.stages.is_empty() {
        write_json(report_path, &report)?;
    }
    Ok(report)
}
