//! Monte-Carlo experiment runners.
//!
//! Every trial is a pure function of `(seed, parameter row, trial index)`:
//! the trial's stream is `RngStream::new(seed, trial)` and the scene and each
//! algorithm draw from streams derived from it. Trials run on a worker pool
//! and are merged by index, so results do not depend on scheduling.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use subspace_ransac::datagen::{make_scene_with, AuditPolicy, SceneLayout};
use subspace_ransac::sampling::GENERATOR_DESCRIPTION;
use subspace_ransac::theory::{
    expected_iterations_clustering, expected_iterations_recovery, expected_iterations_without_replacement, theta1,
    theta2,
};
use subspace_ransac::{
    hardt_moitra_recover, hm_cluster, rand_index, ransac_cluster, ransac_recover, recovery_angle, scc_cluster,
    ClusteringResult, Error as CoreError, RansacConfig, RecoveryResult, ReplacementMode, RngStream, Scene, Subspace,
    TheoryParams,
};

use crate::config::{Algorithm, ExperimentConfig, ExperimentKind, ParamRow};
use crate::error::{BenchError, Result};
use crate::records::{
    mean_se, summarize, write_csv, SummaryRecord, SweepRecord, TheoryRecord, TrialRecord, EXACT_ANGLE,
};

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const THEORY_FILE: &str = "theory.csv";
pub const METADATA_FILE: &str = "metadata.toml";

/// Per-trial records of a recovery or clustering experiment with their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SummaryRecord>,
    /// Runs stopped by the iteration cap.
    pub exhausted: usize,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start {workers} workers: {e}")))
}

/// Runs `f` for every trial index on the configured pool, in index order.
fn run_trials<T: Send>(cfg: &ExperimentConfig, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    pool(cfg.workers)?.install(|| (0..u64::from(cfg.trials)).into_par_iter().map(&f).collect())
}

fn scene_stream(seed: u64, row: usize, trial: u64) -> RngStream {
    RngStream::new(seed, trial).derive(16 * row as u64)
}

fn algorithm_stream(seed: u64, row: usize, trial: u64, alg: Algorithm) -> RngStream {
    RngStream::new(seed, trial).derive(16 * row as u64 + alg.tag())
}

fn ransac_config(cfg: &ExperimentConfig) -> RansacConfig {
    RansacConfig::default()
        .with_max_iterations(cfg.max_iterations)
        .with_replacement(cfg.replacement_mode)
}

fn audit(cfg: &ExperimentConfig) -> AuditPolicy {
    AuditPolicy::sampled(cfg.audit_tuples)
}

fn blank_record(cfg: &ExperimentConfig, alg: Algorithm, row: &ParamRow, trial: u64) -> TrialRecord {
    TrialRecord {
        experiment: cfg.kind.to_string(),
        algorithm: alg.name().into(),
        d: row.d,
        p: row.p,
        k: row.k,
        m: row.m,
        m0: row.m0,
        n: row.n(),
        trial,
        seed: cfg.seed,
        iterations: None,
        angle: None,
        rand_index: None,
        exact: None,
        elapsed_s: 0.0,
        replacement_mode: cfg.replacement_mode.to_string(),
    }
}

/// Iteration count of a run stopped by the cap or an exhausted sampler.
fn cut_off(err: &CoreError, cap: u64) -> Option<u64> {
    match err {
        CoreError::BudgetExhausted { iterations } => Some(*iterations),
        CoreError::ExhaustedSampler { .. } => Some(cap),
        _ => None,
    }
}

fn recovery_trial(cfg: &ExperimentConfig, row_idx: usize, row: &ParamRow, trial: u64) -> Result<Vec<TrialRecord>> {
    let layout = SceneLayout::from(row.theory()?);
    let scene = make_scene_with(&layout, scene_stream(cfg.seed, row_idx, trial), &audit(cfg))?;
    let truth_members = scene.members(1);
    let rcfg = ransac_config(cfg);
    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for &alg in &cfg.algorithms {
        let mut rng = algorithm_stream(cfg.seed, row_idx, trial, alg).generator();
        let start = Instant::now();
        let result: std::result::Result<RecoveryResult, CoreError> = match alg {
            Algorithm::Ransac => ransac_recover(&scene.points, row.d, &rcfg, &mut rng),
            Algorithm::Hm => hardt_moitra_recover(&scene.points, &rcfg, &mut rng),
            _ => unreachable!("validated: recovery algorithms only"),
        };
        let mut rec = blank_record(cfg, alg, row, trial);
        rec.elapsed_s = start.elapsed().as_secs_f64();
        match result {
            Ok(r) => {
                let angle = recovery_angle(&r.subspace, &scene.subspaces[0])?;
                rec.iterations = Some(r.iterations);
                rec.angle = Some(angle);
                rec.exact = Some(angle <= EXACT_ANGLE && r.inlier_indices == truth_members);
            }
            Err(e) => match cut_off(&e, cfg.max_iterations) {
                Some(iterations) => {
                    rec.iterations = Some(iterations);
                    rec.exact = Some(false);
                }
                None => return Err(e.into()),
            },
        }
        out.push(rec);
    }
    Ok(out)
}

fn theory_for(record: &TrialRecord, mode: ReplacementMode) -> Option<f64> {
    let (n, m, d, p) = (record.n, record.m, record.d, record.p);
    match (record.algorithm.as_str(), mode) {
        ("ransac", ReplacementMode::With) => expected_iterations_recovery(n, m, d).ok(),
        ("ransac", ReplacementMode::Without) => expected_iterations_without_replacement(n, m, d).ok(),
        ("hm", ReplacementMode::With) => theta2(n, m, d, p).ok().filter(|&t| t > 0.0).map(|t| 1.0 / t),
        ("ransac_cluster", ReplacementMode::With) => TheoryParams::new(d, p, record.k, m, record.m0)
            .and_then(|t| expected_iterations_clustering(&t))
            .ok()
            .map(|e| e.expected),
        _ => None,
    }
}

fn finish(cfg: &ExperimentConfig, per_trial: Vec<Vec<Vec<TrialRecord>>>) -> ExperimentOutput {
    // order: row, trial, algorithm
    let trials: Vec<TrialRecord> = per_trial.into_iter().flatten().flatten().collect();
    let exhausted = trials
        .iter()
        .filter(|r| r.exact == Some(false) && r.angle.is_none() && r.iterations.is_some())
        .count();
    let summary = summarize(&trials, |r| theory_for(r, cfg.replacement_mode));
    ExperimentOutput {
        trials,
        summary,
        exhausted,
    }
}

fn check_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    cfg.validate()?;
    if cfg.kind != kind {
        return Err(BenchError::Config(format!("expected a {kind} configuration, got {}", cfg.kind)));
    }
    Ok(())
}

/// Recovery trials for every parameter row and algorithm.
pub fn run_recovery_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    check_kind(cfg, ExperimentKind::Recover)?;
    if cfg.algorithms.contains(&Algorithm::Hm) {
        if let Some(row) = cfg.params.iter().find(|r| r.n() <= r.p) {
            return Err(BenchError::Config(format!("hm needs n > p, row {row} has n = {}", row.n())));
        }
    }
    let per_row = cfg
        .params
        .iter()
        .enumerate()
        .map(|(i, row)| run_trials(cfg, |t| recovery_trial(cfg, i, row, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(cfg, per_row))
}

/// Largest, over the true subspaces, of the angle to the closest estimate.
fn worst_matched_angle(estimates: &[Subspace], truth: &[Subspace]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in truth {
        let mut best = FRAC_PI_2;
        for e in estimates {
            best = best.min(recovery_angle(e, t)?);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

fn clustering_trial(cfg: &ExperimentConfig, row_idx: usize, row: &ParamRow, trial: u64) -> Result<Vec<TrialRecord>> {
    let layout = SceneLayout::from(row.theory()?);
    let scene: Scene = make_scene_with(&layout, scene_stream(cfg.seed, row_idx, trial), &audit(cfg))?;
    let rcfg = ransac_config(cfg);
    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for &alg in &cfg.algorithms {
        let mut rng = algorithm_stream(cfg.seed, row_idx, trial, alg).generator();
        let start = Instant::now();
        let result: std::result::Result<ClusteringResult, CoreError> = match alg {
            Algorithm::RansacCluster => ransac_cluster(&scene.points, row.d, row.k, &rcfg, &mut rng),
            Algorithm::HmCluster => hm_cluster(&scene.points, row.k, &rcfg, cfg.search_budget, &mut rng),
            Algorithm::Scc => {
                scc_cluster(&scene.points, row.d, row.k, cfg.scc_tuples, rcfg.rel_tol, &mut rng).map(|(r, _)| r)
            }
            _ => unreachable!("validated: clustering algorithms only"),
        };
        let mut rec = blank_record(cfg, alg, row, trial);
        rec.elapsed_s = start.elapsed().as_secs_f64();
        match result {
            Ok(r) => {
                let ri = rand_index(&r.labels, &scene.labels)?;
                rec.iterations = Some(r.iterations);
                rec.angle = Some(worst_matched_angle(&r.subspaces, &scene.subspaces)?);
                rec.rand_index = Some(ri);
                rec.exact = Some(ri == 1.0);
            }
            Err(e) => {
                if let Some(iterations) = cut_off(&e, cfg.max_iterations) {
                    rec.iterations = Some(iterations);
                    rec.exact = Some(false);
                } else if matches!(e, CoreError::InfeasibleScene(_) | CoreError::InfeasiblePartition { .. }) {
                    log::warn!("{alg} failed on {row} trial {trial}: {e}");
                    rec.exact = Some(false);
                } else {
                    return Err(e.into());
                }
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Clustering trials for every parameter row and algorithm.
pub fn run_clustering_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    check_kind(cfg, ExperimentKind::Cluster)?;
    let per_row = cfg
        .params
        .iter()
        .enumerate()
        .map(|(i, row)| run_trials(cfg, |t| clustering_trial(cfg, i, row, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(cfg, per_row))
}

/// Empirical against closed-form mean RANSAC iterations over the grid
/// `sweep_d x sweep_ratio`, with `n = round(ratio * sweep_m)`. Cells that are
/// infeasible or whose expected count exceeds `expected_cap` keep their row
/// with a skip reason.
pub fn run_complexity_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    check_kind(cfg, ExperimentKind::Sweep)?;
    let rcfg = ransac_config(cfg);
    let m = cfg.sweep_m;
    let mut out = Vec::new();
    let mut cell = 0usize;
    for &d in &cfg.sweep_d {
        for &ratio in &cfg.sweep_ratio {
            let cell_idx = cell;
            cell += 1;
            let n = (ratio * m as f64).round() as usize;
            let p = cfg.sweep_p.max(d + 1);
            let mut rec = SweepRecord {
                d,
                ratio,
                m,
                n,
                p,
                trials: cfg.trials,
                empirical_mean: None,
                theory_mean: None,
                se: None,
                z: None,
                skip_reason: None,
            };
            if m < d + 1 || n < m {
                rec.skip_reason = Some(format!("infeasible: need d+1 <= m <= n, got d={d} m={m} n={n}"));
                out.push(rec);
                continue;
            }
            let theory = match cfg.replacement_mode {
                ReplacementMode::With => expected_iterations_recovery(n, m, d)?,
                ReplacementMode::Without => expected_iterations_without_replacement(n, m, d)?,
            };
            rec.theory_mean = Some(theory);
            if theory > cfg.expected_cap {
                rec.skip_reason = Some(format!("expected iterations {theory:.3e} exceed cap {:.3e}", cfg.expected_cap));
                out.push(rec);
                continue;
            }
            let layout = SceneLayout::from(TheoryParams::recovery(d, p, m, n - m)?);
            let runs = run_trials(cfg, |t| {
                let scene = make_scene_with(&layout, scene_stream(cfg.seed, cell_idx, t), &audit(cfg))?;
                let mut rng = algorithm_stream(cfg.seed, cell_idx, t, Algorithm::Ransac).generator();
                match ransac_recover(&scene.points, d, &rcfg, &mut rng) {
                    Ok(r) => Ok((r.iterations, false)),
                    Err(e) => match cut_off(&e, cfg.max_iterations) {
                        Some(i) => Ok((i, true)),
                        None => Err(e.into()),
                    },
                }
            })?;
            let iterations: Vec<f64> = runs.iter().map(|&(i, _)| i as f64).collect();
            let (mean, se) = mean_se(&iterations).expect("at least one trial");
            rec.empirical_mean = Some(mean);
            rec.se = Some(se);
            rec.z = Some(if se > 0.0 {
                (mean - theory) / se
            } else if mean == theory {
                0.0
            } else {
                f64::INFINITY
            });
            let cut = runs.iter().filter(|r| r.1).count();
            if cut > 0 {
                rec.skip_reason = Some(format!("{cut} runs hit the iteration cap"));
            }
            out.push(rec);
        }
    }
    Ok(out)
}

/// Closed-form quantities for every parameter row.
pub fn run_theory(cfg: &ExperimentConfig) -> Result<Vec<TheoryRecord>> {
    check_kind(cfg, ExperimentKind::Theory)?;
    cfg.params.iter().map(theory_record).collect()
}

pub fn theory_record(row: &ParamRow) -> Result<TheoryRecord> {
    let params = row.theory()?;
    let (n, m, d, p) = (params.n, row.m, row.d, row.p);
    let t2 = if n > p { Some(theta2(n, m, d, p)?) } else { None };
    let clustering = expected_iterations_clustering(&params).ok();
    Ok(TheoryRecord {
        d,
        p,
        k: row.k,
        m,
        m0: row.m0,
        n,
        theta1: theta1(n, m, d)?,
        theta2: t2,
        expected_recovery: expected_iterations_recovery(n, m, d).ok(),
        expected_hm: t2.filter(|&t| t > 0.0).map(|t| 1.0 / t),
        expected_without_replacement: expected_iterations_without_replacement(n, m, d).ok(),
        expected_clustering: clustering.as_ref().map(|c| c.expected),
        clustering_bound: clustering.as_ref().map(|c| c.bound),
    })
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'static str,
    generator: &'static str,
    trial_streams: &'static str,
    subspaces: &'static str,
    outliers: &'static str,
    angle: &'static str,
    exact_angle: f64,
    config: &'a ExperimentConfig,
}

pub fn write_metadata(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        generator: GENERATOR_DESCRIPTION,
        trial_streams: "trial t uses stream_id t; scene and algorithm streams are derived from it per parameter row",
        subspaces: "resampled independently for every trial",
        outliers: "label 0; the Rand index counts outliers as one extra class in both labelings",
        angle: "largest principal angle between estimate and truth (clustering: worst over true subspaces of the closest estimate)",
        exact_angle: EXACT_ANGLE,
        config: cfg,
    };
    let text = toml::to_string(&meta).expect("metadata always serializes");
    let path = dir.join(METADATA_FILE);
    fs::write(&path, text).map_err(|e| BenchError::io(path, e))
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))
}

/// Runs the configured experiment and writes its CSV files and metadata into
/// `cfg.output`. Runs stopped by the iteration cap are recorded, then
/// reported as an error once everything is written.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    let dir = cfg.output.as_path();
    let exhausted = match cfg.kind {
        ExperimentKind::Recover | ExperimentKind::Cluster => {
            let out = if cfg.kind == ExperimentKind::Recover {
                run_recovery_experiment(cfg)?
            } else {
                run_clustering_experiment(cfg)?
            };
            prepare(dir)?;
            write_csv(&dir.join(TRIALS_FILE), &out.trials)?;
            write_csv(&dir.join(SUMMARY_FILE), &out.summary)?;
            out.exhausted
        }
        ExperimentKind::Sweep => {
            let rows = run_complexity_sweep(cfg)?;
            prepare(dir)?;
            write_csv(&dir.join(SWEEP_FILE), &rows)?;
            rows.iter()
                .filter(|r| r.skip_reason.as_deref().is_some_and(|s| s.contains("hit the iteration cap")))
                .count()
        }
        ExperimentKind::Theory => {
            let rows = run_theory(cfg)?;
            prepare(dir)?;
            write_csv(&dir.join(THEORY_FILE), &rows)?;
            0
        }
    };
    write_metadata(dir, cfg)?;
    if exhausted > 0 {
        return Err(BenchError::BudgetExhausted {
            count: exhausted,
            cap: cfg.max_iterations,
        });
    }
    Ok(())
}
