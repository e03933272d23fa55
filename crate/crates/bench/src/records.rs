//! CSV rows written by the experiments. Empty cells mark columns that do not
//! apply to a row.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ParamRow;
use crate::error::{BenchError, Result};

/// Angle at or below which a recovery counts as exact.
pub const EXACT_ANGLE: f64 = 1e-8;

/// One algorithm run on one trial scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub algorithm: String,
    pub d: usize,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub m: usize,
    pub m0: usize,
    pub n: usize,
    pub trial: u64,
    pub seed: u64,
    /// Tuple draws; the cap itself when the run was cut off.
    pub iterations: Option<u64>,
    pub angle: Option<f64>,
    pub rand_index: Option<f64>,
    pub exact: Option<bool>,
    pub elapsed_s: f64,
    pub replacement_mode: String,
}

impl TrialRecord {
    pub fn row(&self) -> ParamRow {
        ParamRow::new(self.d, self.p, self.k, self.m, self.m0)
    }
}

/// Aggregate over the trials of one parameter row and algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub experiment: String,
    pub algorithm: String,
    pub d: usize,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub m: usize,
    pub m0: usize,
    pub n: usize,
    pub mean_iterations: Option<f64>,
    pub se_iterations: Option<f64>,
    pub theory_iterations: Option<f64>,
    pub mean_angle: Option<f64>,
    pub exact_fraction: Option<f64>,
    pub mean_rand_index: Option<f64>,
}

/// One cell of the iteration-count sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub d: usize,
    pub ratio: f64,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub trials: u32,
    pub empirical_mean: Option<f64>,
    pub theory_mean: Option<f64>,
    pub se: Option<f64>,
    /// `(empirical_mean - theory_mean) / se`.
    pub z: Option<f64>,
    pub skip_reason: Option<String>,
}

/// Closed-form quantities for one parameter row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRecord {
    pub d: usize,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub m: usize,
    pub m0: usize,
    pub n: usize,
    pub theta1: f64,
    pub theta2: Option<f64>,
    pub expected_recovery: Option<f64>,
    pub expected_hm: Option<f64>,
    pub expected_without_replacement: Option<f64>,
    pub expected_clustering: Option<f64>,
    pub clustering_bound: Option<f64>,
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Groups records by (row, algorithm) in first-appearance order and averages
/// them. `theory` supplies the closed-form expectation for a group.
pub fn summarize(records: &[TrialRecord], theory: impl Fn(&TrialRecord) -> Option<f64>) -> Vec<SummaryRecord> {
    let mut order: Vec<(String, String, [usize; 5])> = Vec::new();
    let mut groups: BTreeMap<(String, String, [usize; 5]), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.experiment.clone(), r.algorithm.clone(), r.row().into());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let first = group[0];
            let iterations: Vec<f64> = group.iter().filter_map(|r| r.iterations).map(|x| x as f64).collect();
            let stats = mean_se(&iterations);
            let exact: Vec<bool> = group.iter().filter_map(|r| r.exact).collect();
            SummaryRecord {
                experiment: first.experiment.clone(),
                algorithm: first.algorithm.clone(),
                d: first.d,
                p: first.p,
                k: first.k,
                m: first.m,
                m0: first.m0,
                n: first.n,
                mean_iterations: stats.map(|s| s.0),
                se_iterations: stats.map(|s| s.1),
                theory_iterations: theory(first),
                mean_angle: mean(group.iter().filter_map(|r| r.angle)),
                exact_fraction: mean(exact.iter().map(|&e| f64::from(u8::from(e)))),
                mean_rand_index: mean(group.iter().filter_map(|r| r.rand_index)),
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| BenchError::csv(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| BenchError::csv(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| BenchError::csv(path, e)))
        .collect()
}
