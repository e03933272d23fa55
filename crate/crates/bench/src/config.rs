//! Experiment configuration: a flat TOML document whose keys are the fields
//! of [`ExperimentConfig`]. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use subspace_ransac::{ReplacementMode, TheoryParams};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Recover,
    Cluster,
    Sweep,
    Theory,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Recover => "recover",
            Self::Cluster => "cluster",
            Self::Sweep => "sweep",
            Self::Theory => "theory",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ransac,
    Hm,
    RansacCluster,
    HmCluster,
    Scc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ransac => "ransac",
            Self::Hm => "hm",
            Self::RansacCluster => "ransac_cluster",
            Self::HmCluster => "hm_cluster",
            Self::Scc => "scc",
        }
    }

    pub fn is_recovery(self) -> bool {
        matches!(self, Self::Ransac | Self::Hm)
    }

    /// Stable small integer used to derive the algorithm's random stream.
    pub(crate) fn tag(self) -> u64 {
        match self {
            Self::Ransac => 1,
            Self::Hm => 2,
            Self::RansacCluster => 3,
            Self::HmCluster => 4,
            Self::Scc => 5,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ransac" => Self::Ransac,
            "hm" => Self::Hm,
            "ransac_cluster" => Self::RansacCluster,
            "hm_cluster" => Self::HmCluster,
            "scc" => Self::Scc,
            other => return Err(BenchError::Config(format!("unknown algorithm {other:?}"))),
        })
    }
}

/// One parameter row `[d, p, K, m, m0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 5]", into = "[usize; 5]")]
pub struct ParamRow {
    pub d: usize,
    pub p: usize,
    pub k: usize,
    pub m: usize,
    pub m0: usize,
}

impl ParamRow {
    pub const fn new(d: usize, p: usize, k: usize, m: usize, m0: usize) -> Self {
        Self { d, p, k, m, m0 }
    }

    pub fn n(&self) -> usize {
        self.k * self.m + self.m0
    }

    pub fn theory(&self) -> Result<TheoryParams> {
        TheoryParams::new(self.d, self.p, self.k, self.m, self.m0)
            .map_err(|e| BenchError::Config(format!("row {self}: {e}")))
    }
}

impl From<[usize; 5]> for ParamRow {
    fn from([d, p, k, m, m0]: [usize; 5]) -> Self {
        Self { d, p, k, m, m0 }
    }
}

impl From<ParamRow> for [usize; 5] {
    fn from(r: ParamRow) -> Self {
        [r.d, r.p, r.k, r.m, r.m0]
    }
}

impl fmt::Display for ParamRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(d={}, p={}, K={}, m={}, m0={})", self.d, self.p, self.k, self.m, self.m0)
    }
}

fn ser_mode<S: Serializer>(mode: &ReplacementMode, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&mode.to_string())
}

fn de_mode<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ReplacementMode, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Parameter rows `[d, p, K, m, m0]`; unused by sweeps.
    #[serde(default)]
    pub params: Vec<ParamRow>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default, serialize_with = "ser_mode", deserialize_with = "de_mode")]
    pub replacement_mode: ReplacementMode,
    /// Cap on the tuple draws of a single run.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u64,
    /// Sweep cells whose expected iteration count exceeds this are skipped.
    #[serde(default = "default_expected_cap")]
    pub expected_cap: f64,
    /// Sampled `d`-tuples for spectral clustering.
    #[serde(default = "default_scc_tuples")]
    pub scc_tuples: usize,
    /// Rank tests budget of the minimum dependent subset search.
    #[serde(default = "default_search_budget")]
    pub search_budget: u64,
    /// Tuples checked by the general-position audit of each generated scene.
    #[serde(default = "default_audit_tuples")]
    pub audit_tuples: usize,
    #[serde(default = "default_sweep_d")]
    pub sweep_d: Vec<usize>,
    #[serde(default = "default_sweep_ratio")]
    pub sweep_ratio: Vec<f64>,
    #[serde(default = "default_sweep_m")]
    pub sweep_m: usize,
    /// Ambient dimension of sweep scenes (raised to `d + 1` where needed).
    #[serde(default = "default_sweep_p")]
    pub sweep_p: usize,
}

fn default_trials() -> u32 {
    1000
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_max_iterations() -> u64 {
    1_000_000
}
fn default_expected_cap() -> f64 {
    1e5
}
fn default_scc_tuples() -> usize {
    500
}
fn default_search_budget() -> u64 {
    subspace_ransac::clustering::DEFAULT_SEARCH_BUDGET
}
fn default_audit_tuples() -> usize {
    500
}
fn default_sweep_d() -> Vec<usize> {
    vec![1, 2, 3, 4]
}
fn default_sweep_ratio() -> Vec<f64> {
    vec![1.25, 1.5, 2.0]
}
fn default_sweep_m() -> usize {
    40
}
fn default_sweep_p() -> usize {
    8
}

/// Reference recovery rows, one subspace each.
pub const TABLE1_ROWS: [ParamRow; 6] = [
    ParamRow::new(8, 10, 1, 100, 50),
    ParamRow::new(4, 10, 1, 100, 50),
    ParamRow::new(8, 20, 1, 100, 50),
    ParamRow::new(6, 10, 1, 100, 20),
    ParamRow::new(9, 10, 1, 100, 50),
    ParamRow::new(18, 20, 1, 100, 50),
];

/// Reference clustering rows.
pub const TABLE2_ROWS: [ParamRow; 5] = [
    ParamRow::new(4, 8, 3, 50, 50),
    ParamRow::new(6, 8, 3, 50, 50),
    ParamRow::new(4, 8, 3, 50, 100),
    ParamRow::new(4, 8, 5, 50, 50),
    ParamRow::new(8, 10, 3, 50, 50),
];

impl ExperimentConfig {
    /// Defaults for every optional key.
    pub fn new(kind: ExperimentKind) -> Self {
        let (trials, algorithms) = match kind {
            ExperimentKind::Recover => (1000, vec![Algorithm::Ransac, Algorithm::Hm]),
            ExperimentKind::Cluster => (500, vec![Algorithm::RansacCluster]),
            ExperimentKind::Sweep => (1000, vec![Algorithm::Ransac]),
            ExperimentKind::Theory => (1, Vec::new()),
        };
        Self {
            kind,
            params: Vec::new(),
            trials,
            seed: 0,
            algorithms,
            output: default_output(),
            workers: 0,
            replacement_mode: ReplacementMode::With,
            max_iterations: default_max_iterations(),
            expected_cap: default_expected_cap(),
            scc_tuples: default_scc_tuples(),
            search_budget: default_search_budget(),
            audit_tuples: default_audit_tuples(),
            sweep_d: default_sweep_d(),
            sweep_ratio: default_sweep_ratio(),
            sweep_m: default_sweep_m(),
            sweep_p: default_sweep_p(),
        }
    }

    /// Built-in configurations: `table1`, `table2`, `figure2`.
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "table1" => Self {
                params: TABLE1_ROWS.to_vec(),
                ..Self::new(ExperimentKind::Recover)
            },
            "table2" => Self {
                params: TABLE2_ROWS.to_vec(),
                algorithms: vec![Algorithm::RansacCluster, Algorithm::Scc],
                ..Self::new(ExperimentKind::Cluster)
            },
            "figure2" => Self::new(ExperimentKind::Sweep),
            other => return Err(BenchError::Config(format!("unknown preset {other:?}"))),
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            BenchError::Config(msg) => BenchError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive".into());
        }
        match self.kind {
            ExperimentKind::Recover | ExperimentKind::Cluster | ExperimentKind::Theory => {
                if self.params.is_empty() {
                    return bad(format!("{} experiments need at least one params row", self.kind));
                }
                for row in &self.params {
                    row.theory()?;
                }
            }
            ExperimentKind::Sweep => {
                if self.sweep_d.is_empty() || self.sweep_ratio.is_empty() {
                    return bad("sweep grids must be nonempty".into());
                }
                if self.sweep_d.contains(&0) {
                    return bad("sweep dimensions must be positive".into());
                }
                if self.sweep_ratio.iter().any(|r| !(r.is_finite() && *r >= 1.0)) {
                    return bad("sweep ratios must be finite and at least 1".into());
                }
            }
        }
        for a in &self.algorithms {
            let ok = match self.kind {
                ExperimentKind::Recover => a.is_recovery(),
                ExperimentKind::Cluster => !a.is_recovery(),
                ExperimentKind::Sweep => *a == Algorithm::Ransac,
                ExperimentKind::Theory => true,
            };
            if !ok {
                return bad(format!("algorithm {a} does not apply to {} experiments", self.kind));
            }
        }
        if matches!(self.kind, ExperimentKind::Recover | ExperimentKind::Cluster) && self.algorithms.is_empty() {
            return bad("no algorithms selected".into());
        }
        if self.kind == ExperimentKind::Recover && self.params.iter().any(|r| r.k != 1) {
            return bad("recovery rows must have K = 1".into());
        }
        Ok(())
    }
}
