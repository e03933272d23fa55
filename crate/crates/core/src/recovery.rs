//! Single-subspace recovery: RANSAC with known dimension, the Hardt–Moitra
//! p-tuple variant, and dimension escalation when `d` is unknown.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    numerical_rank, orthonormal_basis, residual_distance, thin_svd, PointCloud, Subspace, DEFAULT_MEMBERSHIP_TOL,
    DEFAULT_REL_TOL,
};
use crate::sampling::{ReplacementMode, TupleSampler};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    /// Relative singular-value threshold of the dependence test.
    pub rel_tol: f64,
    /// Residual at or below which a point belongs to a recovered subspace.
    pub membership_tol: f64,
    /// Cap on the total number of tuple draws in one run.
    pub max_iterations: Option<u64>,
    pub replacement: ReplacementMode,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            membership_tol: DEFAULT_MEMBERSHIP_TOL,
            max_iterations: None,
            replacement: ReplacementMode::With,
        }
    }
}

impl RansacConfig {
    pub fn with_max_iterations(mut self, cap: u64) -> Self {
        self.max_iterations = Some(cap);
        self
    }

    pub fn with_replacement(mut self, mode: ReplacementMode) -> Self {
        self.replacement = mode;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t.is_finite();
        if !ok(self.rel_tol) || !ok(self.membership_tol) {
            return Err(Error::invalid("tolerances must be positive and finite"));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub subspace: Subspace,
    /// Every point within `membership_tol` of the subspace, ascending.
    pub inlier_indices: Vec<usize>,
    /// Tuple draws, each followed by one dependence test.
    pub iterations: u64,
    pub elapsed: Duration,
}

/// Iteration counter shared by the stages of one run, enforcing the cap.
#[derive(Debug)]
pub(crate) struct IterationBudget {
    used: u64,
    cap: Option<u64>,
}

impl IterationBudget {
    pub(crate) fn new(cap: Option<u64>) -> Self {
        Self { used: 0, cap }
    }

    pub(crate) fn used(&self) -> u64 {
        self.used
    }

    fn tick(&mut self) -> Result<()> {
        if self.cap.is_some_and(|c| self.used >= c) {
            return Err(Error::BudgetExhausted { iterations: self.used });
        }
        self.used += 1;
        Ok(())
    }
}

fn dependent(cloud: &PointCloud, indices: &[usize], rel_tol: f64) -> Result<bool> {
    Ok(numerical_rank(&cloud.gather(indices), rel_tol)? < indices.len())
}

/// Draw `q`-tuples from `working` until one is linearly dependent; returns its
/// point indices. `limit` bounds the draws of this call only.
pub(crate) fn find_dependent_tuple<R: Rng + ?Sized>(
    cloud: &PointCloud,
    working: &[usize],
    sampler: &mut TupleSampler,
    rel_tol: f64,
    budget: &mut IterationBudget,
    limit: Option<u64>,
    rng: &mut R,
) -> Result<Option<Vec<usize>>> {
    let mut draws = 0u64;
    loop {
        if limit.is_some_and(|l| draws >= l) {
            return Ok(None);
        }
        let draw = sampler.draw(rng)?;
        budget.tick()?;
        draws += 1;
        let tuple: Vec<usize> = draw.indices().iter().map(|&i| working[i]).collect();
        if dependent(cloud, &tuple, rel_tol)? {
            return Ok(Some(tuple));
        }
    }
}

pub(crate) fn members_of(
    cloud: &PointCloud,
    candidates: &[usize],
    s: &Subspace,
    membership_tol: f64,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for &i in candidates {
        if residual_distance(cloud.point(i), s)? <= membership_tol {
            out.push(i);
        }
    }
    Ok(out)
}

fn finish(
    cloud: &PointCloud,
    spanning: &[usize],
    cfg: &RansacConfig,
    iterations: u64,
    start: Instant,
) -> Result<RecoveryResult> {
    let subspace = orthonormal_basis(&cloud.gather(spanning), cfg.rel_tol)?;
    let all: Vec<usize> = (0..cloud.len()).collect();
    let inlier_indices = members_of(cloud, &all, &subspace, cfg.membership_tol)?;
    Ok(RecoveryResult {
        subspace,
        inlier_indices,
        iterations,
        elapsed: start.elapsed(),
    })
}

/// RANSAC with known subspace dimension `d`: sample `(d+1)`-tuples until one
/// is linearly dependent and return its span.
pub fn ransac_recover<R: Rng + ?Sized>(
    cloud: &PointCloud,
    d: usize,
    cfg: &RansacConfig,
    rng: &mut R,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    let (n, p) = (cloud.len(), cloud.ambient_dim());
    if d == 0 || d >= p {
        return Err(Error::invalid(format!("need 1 <= d < p, got d={d} p={p}")));
    }
    if n < d + 1 {
        return Err(Error::invalid(format!("need n >= d+1, got n={n} d={d}")));
    }
    let start = Instant::now();
    let working: Vec<usize> = (0..n).collect();
    let mut sampler = TupleSampler::new(n, d + 1, cfg.replacement)?;
    let mut budget = IterationBudget::new(cfg.max_iterations);
    let tuple = find_dependent_tuple(cloud, &working, &mut sampler, cfg.rel_tol, &mut budget, None, rng)?
        .expect("unlimited search only returns on success");
    finish(cloud, &tuple, cfg, budget.used(), start)
}

/// Positions (within the tuple) of every point that takes part in some
/// linear dependency: the union of the supports of a null-space basis.
///
/// `tuple` holds the points as columns and must have at most as many columns
/// as rows.
pub fn extract_dependent_subset(tuple: &DMatrix<f64>, rel_tol: f64) -> Result<Vec<usize>> {
    let (p, q) = tuple.shape();
    if q == 0 || q > p {
        return Err(Error::invalid(format!("tuple must have 1..={p} columns, got {q}")));
    }
    let rank = numerical_rank(tuple, rel_tol)?;
    if rank == q {
        return Err(Error::ContractViolation(
            "tuple is numerically full rank".into(),
        ));
    }
    let svd = thin_svd(tuple)?;
    let max = svd.s.iter().copied().fold(0.0, f64::max);
    let mut in_support = vec![false; q];
    for (col, &s) in svd.s.iter().enumerate() {
        if s > rel_tol * max {
            continue;
        }
        let v = svd.v.column(col);
        let peak = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for (i, x) in v.iter().enumerate() {
            if x.abs() > rel_tol * peak {
                in_support[i] = true;
            }
        }
    }
    Ok((0..q).filter(|&i| in_support[i]).collect())
}

/// Hardt–Moitra recovery: sample `p`-tuples until one is dependent and return
/// the span of its dependent part. The subspace dimension is not an input.
pub fn hardt_moitra_recover<R: Rng + ?Sized>(
    cloud: &PointCloud,
    cfg: &RansacConfig,
    rng: &mut R,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    let (n, p) = (cloud.len(), cloud.ambient_dim());
    if n <= p {
        return Err(Error::invalid(format!("need n > p, got n={n} p={p}")));
    }
    let start = Instant::now();
    let working: Vec<usize> = (0..n).collect();
    let mut sampler = TupleSampler::new(n, p, cfg.replacement)?;
    let mut budget = IterationBudget::new(cfg.max_iterations);
    let tuple = find_dependent_tuple(cloud, &working, &mut sampler, cfg.rel_tol, &mut budget, None, rng)?
        .expect("unlimited search only returns on success");
    let positions = extract_dependent_subset(&cloud.gather(&tuple), cfg.rel_tol)?;
    let spanning: Vec<usize> = positions.iter().map(|&i| tuple[i]).collect();
    finish(cloud, &spanning, cfg, budget.used(), start)
}

/// RANSAC for an unknown dimension: try `d = 1, 2, ..., p-1` with `budget`
/// draws each, sweeping again from `d = 1` until a dependent tuple appears.
///
/// The returned subspace is spanned by the dependent part of that tuple. The
/// iteration count covers every draw of every sweep; `cfg.max_iterations`
/// bounds the total.
pub fn ransac_recover_unknown_d<R: Rng + ?Sized>(
    cloud: &PointCloud,
    budget_per_dim: u64,
    cfg: &RansacConfig,
    rng: &mut R,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    if budget_per_dim == 0 {
        return Err(Error::invalid("budget per dimension must be positive"));
    }
    let (n, p) = (cloud.len(), cloud.ambient_dim());
    let max_d = (p - 1).min(n.saturating_sub(1));
    if max_d == 0 {
        return Err(Error::invalid(format!("no admissible dimension for n={n} p={p}")));
    }
    let start = Instant::now();
    let working: Vec<usize> = (0..n).collect();
    let mut samplers: Vec<Option<TupleSampler>> = (1..=max_d)
        .map(|d| TupleSampler::new(n, d + 1, cfg.replacement).map(Some))
        .collect::<Result<_>>()?;
    let mut budget = IterationBudget::new(cfg.max_iterations);
    loop {
        let mut any_live = false;
        for d in 1..=max_d {
            let Some(sampler) = samplers[d - 1].as_mut() else {
                continue;
            };
            any_live = true;
            match find_dependent_tuple(
                cloud,
                &working,
                sampler,
                cfg.rel_tol,
                &mut budget,
                Some(budget_per_dim),
                rng,
            ) {
                Ok(Some(tuple)) => {
                    let positions = extract_dependent_subset(&cloud.gather(&tuple), cfg.rel_tol)?;
                    let spanning: Vec<usize> = positions.iter().map(|&i| tuple[i]).collect();
                    return finish(cloud, &spanning, cfg, budget.used(), start);
                }
                Ok(None) => {}
                Err(Error::ExhaustedSampler { .. }) => samplers[d - 1] = None,
                Err(e) => return Err(e),
            }
        }
        if !any_live {
            return Err(Error::ExhaustedSampler { total: 0 });
        }
    }
}
