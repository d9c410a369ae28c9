use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::abstraction::AbstractAction;
use crate::cfr::{LearnerState, PolicyBuffer};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p0: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p100: f64,
}

/// Linear-interpolation quantiles (position q·(n−1) in the sorted data). `None` for no data.
pub fn quantiles(values: &[f64]) -> Option<Quantiles> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    Some(Quantiles { p0: at(0.0), p25: at(0.25), p50: at(0.5), p75: at(0.75), p100: at(1.0) })
}

pub fn update_count_quantiles(policies: &PolicyBuffer) -> Option<Quantiles> {
    let counts: Vec<f64> = policies.update_count.values().map(|c| *c as f64).collect();
    quantiles(&counts)
}

/// For each abstract action, the median of its average-policy probability over the info sets
/// (of either player) where that probability is positive. Actions never given mass are absent.
pub fn median_action_probabilities(policies: &PolicyBuffer) -> BTreeMap<AbstractAction, f64> {
    let mut samples: BTreeMap<AbstractAction, Vec<f64>> = BTreeMap::new();
    for buffer in &policies.player_buffers {
        for fifo in buffer.buffer.values().filter(|f| !f.is_empty()) {
            for action in AbstractAction::ALL {
                let mean = fifo.iter().map(|v| v[action.index()]).sum::<f64>() / fifo.len() as f64;
                if mean > 0.0 {
                    samples.entry(action).or_default().push(mean);
                }
            }
        }
    }
    samples.into_iter().filter_map(|(a, v)| Some((a, quantiles(&v)?.p50))).collect()
}

/// One evaluation step of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Number of games merged into the learner when the record was taken.
    pub step: u64,
    pub max_expected_regret: Option<f64>,
    /// Trailing mean of the per-game MER over the last evaluation interval.
    pub max_expected_regret_smooth: Option<f64>,
    /// MER computed from accumulated rather than mean regret.
    pub max_expected_regret_sum: Option<f64>,
    pub random_agent_first: f64,
    pub random_alternating: f64,
    pub risk_aware_agent_first: f64,
    pub risk_aware_alternating: f64,
    pub infoset_count: usize,
    pub update_count_quantiles: Option<Quantiles>,
    /// Keyed by snake_case action name.
    pub median_action_probability: BTreeMap<String, f64>,
    pub elapsed_secs: f64,
}

impl MetricsRecord {
    pub fn learner_fields(state: &LearnerState) -> (usize, Option<Quantiles>, BTreeMap<String, f64>) {
        let medians = median_action_probabilities(&state.policies)
            .into_iter()
            .map(|(a, m)| (a.snake_name().to_string(), m))
            .collect();
        (state.infoset_count(), update_count_quantiles(&state.policies), medians)
    }

    fn csv_header() -> Vec<String> {
        let mut header: Vec<String> = [
            "step",
            "max_expected_regret",
            "max_expected_regret_smooth",
            "max_expected_regret_sum",
            "random_agent_first",
            "random_alternating",
            "risk_aware_agent_first",
            "risk_aware_alternating",
            "infoset_count",
            "update_count_p0",
            "update_count_p25",
            "update_count_p50",
            "update_count_p75",
            "update_count_p100",
        ]
        .map(String::from)
        .into();
        header.extend(AbstractAction::ALL.iter().map(|a| format!("median_prob_{}", a.snake_name())));
        header.push("elapsed_secs".into());
        header
    }

    fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let q = self.update_count_quantiles;
        let mut row = vec![
            self.step.to_string(),
            opt(self.max_expected_regret),
            opt(self.max_expected_regret_smooth),
            opt(self.max_expected_regret_sum),
            self.random_agent_first.to_string(),
            self.random_alternating.to_string(),
            self.risk_aware_agent_first.to_string(),
            self.risk_aware_alternating.to_string(),
            self.infoset_count.to_string(),
            opt(q.map(|q| q.p0)),
            opt(q.map(|q| q.p25)),
            opt(q.map(|q| q.p50)),
            opt(q.map(|q| q.p75)),
            opt(q.map(|q| q.p100)),
        ];
        row.extend(
            AbstractAction::ALL.iter().map(|a| opt(self.median_action_probability.get(a.snake_name()).copied())),
        );
        row.push(self.elapsed_secs.to_string());
        row
    }
}

/// Appends records to `<stem>.jsonl` and a CSV mirror `<stem>.csv`.
pub struct MetricsSink {
    jsonl: PathBuf,
    csv: PathBuf,
}

impl MetricsSink {
    /// Creates the directory and checks both files can be opened for appending.
    pub fn open(dir: &Path) -> Result<Self, OrchestratorError> {
        fs::create_dir_all(dir).map_err(|e| OrchestratorError::io(dir, e))?;
        let sink = MetricsSink { jsonl: dir.join("metrics.jsonl"), csv: dir.join("metrics.csv") };
        for path in [&sink.jsonl, &sink.csv] {
            append(path).map_err(|e| OrchestratorError::io(path, e))?;
        }
        Ok(sink)
    }

    pub fn paths(&self) -> (&Path, &Path) {
        (&self.jsonl, &self.csv)
    }

    pub fn append(&self, record: &MetricsRecord) -> Result<(), OrchestratorError> {
        metrics_append(record, &self.jsonl, &self.csv)
    }
}

fn append(path: &Path) -> std::io::Result<File> {
    OpenOptions::new().create(true).append(true).open(path)
}

/// Appends one JSON line and one CSV row (writing the CSV header first if the file is empty).
pub fn metrics_append(record: &MetricsRecord, jsonl: &Path, csv_path: &Path) -> Result<(), OrchestratorError> {
    let mut line = serde_json::to_string(record).expect("metrics records always serialize");
    line.push('\n');
    append(jsonl).and_then(|mut f| f.write_all(line.as_bytes())).map_err(|e| OrchestratorError::io(jsonl, e))?;

    let file = append(csv_path).map_err(|e| OrchestratorError::io(csv_path, e))?;
    let empty = file.metadata().map(|m| m.len() == 0).unwrap_or(true);
    let mut writer = csv::Writer::from_writer(file);
    let io = |e: csv::Error| OrchestratorError::io(csv_path, std::io::Error::other(e));
    if empty {
        writer.write_record(MetricsRecord::csv_header()).map_err(io)?;
    }
    writer.write_record(record.csv_row()).map_err(io)?;
    writer.flush().map_err(|e| OrchestratorError::io(csv_path, e))
}
