//! Closed-form iteration-count laws for the sampling algorithms.
//!
//! Every binomial coefficient is handled as a difference of log-gamma values,
//! so quantities such as `C(150, 19)` never overflow.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Parameters shared by scene generation and the probability laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TheoryParams {
    /// Total number of points, `k * m + m0`.
    pub n: usize,
    /// Ambient dimension.
    pub p: usize,
    /// Dimension of every planted subspace.
    pub d: usize,
    /// Inliers per subspace.
    pub m: usize,
    /// Outliers.
    pub m0: usize,
    /// Number of planted subspaces.
    pub k: usize,
}

impl TheoryParams {
    pub fn new(d: usize, p: usize, k: usize, m: usize, m0: usize) -> Result<Self> {
        let params = Self {
            n: k * m + m0,
            p,
            d,
            m,
            m0,
            k,
        };
        params.validate()?;
        Ok(params)
    }

    /// Single-subspace (recovery) parameters.
    pub fn recovery(d: usize, p: usize, m: usize, m0: usize) -> Result<Self> {
        Self::new(d, p, 1, m, m0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d >= self.p {
            return Err(Error::invalid(format!(
                "need 1 <= d < p, got d={} p={}",
                self.d, self.p
            )));
        }
        if self.k == 0 {
            return Err(Error::invalid("need at least one subspace"));
        }
        if self.m < self.d + 1 {
            return Err(Error::invalid(format!(
                "need m >= d+1 inliers per subspace, got m={} d={}",
                self.m, self.d
            )));
        }
        if self.n != self.k * self.m + self.m0 {
            return Err(Error::invalid("n must equal k*m + m0"));
        }
        Ok(())
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `C(a, q) / C(b, q)` for `a <= b`, as a product of `q` ratios.
fn choose_ratio(a: usize, b: usize, q: usize) -> f64 {
    if q > a {
        return 0.0;
    }
    (0..q).map(|i| (a - i) as f64 / (b - i) as f64).product()
}

/// `1 / C(n, q)`, exact when the count fits in a `u128`.
fn inv_choose(n: usize, q: usize) -> f64 {
    match crate::sampling::subset_count(n, q) {
        Some(c) => 1.0 / c as f64,
        None => (-ln_choose(n as u64, q as u64)).exp(),
    }
}

fn check_counts(n: usize, m: usize) -> Result<()> {
    if m > n {
        return Err(Error::invalid(format!("inliers m={m} exceed points n={n}")));
    }
    Ok(())
}

/// Probability that a uniform `(d+1)`-subset is made only of inliers:
/// `C(m, d+1) / C(n, d+1)`.
///
/// Returns 0 (and logs a warning) when `m < d+1`, i.e. there is no
/// recoverable subspace.
pub fn theta1(n: usize, m: usize, d: usize) -> Result<f64> {
    check_counts(n, m)?;
    if m < d + 1 {
        log::warn!("no recoverable subspace: m={m} < d+1={}", d + 1);
        return Ok(0.0);
    }
    Ok(choose_ratio(m, n, d + 1).min(1.0))
}

/// Probability that a uniform `p`-subset holds at least `d+1` inliers (an
/// upper hypergeometric tail).
pub fn theta2(n: usize, m: usize, d: usize, p: usize) -> Result<f64> {
    check_counts(n, m)?;
    if p >= n {
        return Err(Error::invalid(format!("need p < n, got p={p} n={n}")));
    }
    if p < d + 1 {
        return Err(Error::invalid(format!("need p >= d+1, got p={p} d={d}")));
    }
    let lo = (d + 1).max(p.saturating_sub(n - m));
    let hi = p.min(m);
    if lo > hi {
        return Ok(0.0);
    }
    let denom = ln_choose(n as u64, p as u64);
    let terms: Vec<f64> = (lo..=hi)
        .map(|k| {
            ln_choose(m as u64, k as u64) + ln_choose((n - m) as u64, (p - k) as u64) - denom
        })
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    Ok((peak + sum.ln()).exp().min(1.0))
}

/// Mean of a geometric law on `{1, 2, ...}` with success probability `theta`.
pub fn geometric_mean(theta: f64) -> Result<f64> {
    if theta <= 0.0 {
        return Err(Error::InfiniteExpectation);
    }
    Ok(1.0 / theta)
}

pub fn geometric_variance(theta: f64) -> Result<f64> {
    if theta <= 0.0 {
        return Err(Error::InfiniteExpectation);
    }
    Ok((1.0 - theta) / (theta * theta))
}

/// `1 / theta1`, the expected number of RANSAC iterations with replacement.
pub fn expected_iterations_recovery(n: usize, m: usize, d: usize) -> Result<f64> {
    geometric_mean(theta1(n, m, d)?)
}

/// Exact expected number of draws without replacement:
/// `(C(n, d+1) + 1) / (C(m, d+1) + 1)`.
///
/// This is the mean of a negative hypergeometric waiting time; it never
/// exceeds [`expected_iterations_recovery`].
pub fn expected_iterations_without_replacement(n: usize, m: usize, d: usize) -> Result<f64> {
    check_counts(n, m)?;
    if m < d + 1 {
        return Err(Error::InfiniteExpectation);
    }
    let q = d + 1;
    // (C_n + 1) / (C_m + 1) = (C_n / C_m) (1 + 1/C_n) / (1 + 1/C_m)
    Ok((1.0 + inv_choose(n, q)) / (1.0 + inv_choose(m, q)) / choose_ratio(m, n, q))
}

/// Worst-case draws without replacement: every non-inlier tuple, then one more.
pub fn worst_case_iterations_without_replacement(n: usize, m: usize, d: usize) -> Option<u128> {
    let all = crate::sampling::subset_count(n, d + 1)?;
    let good = crate::sampling::subset_count(m, d + 1)?;
    Some(all - good + 1)
}

/// Expected iteration count of RANSAC clustering, stage by stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringExpectation {
    /// Sum of the stage means.
    pub expected: f64,
    /// `K / theta1` computed on the full data.
    pub bound: f64,
    /// Success probability of stage `j` (index `j - 1`).
    pub stage_probabilities: Vec<f64>,
}

/// Stage `j` succeeds when a `(d+1)`-tuple drawn from the `n - (j-1) m`
/// remaining points falls entirely on one of the `K - j + 1` remaining
/// subspaces.
pub fn stage_probabilities(params: &TheoryParams) -> Result<Vec<f64>> {
    params.validate()?;
    Ok((1..=params.k)
        .map(|j| {
            let remaining = params.n - (j - 1) * params.m;
            let subspaces = (params.k - j + 1) as f64;
            (subspaces * choose_ratio(params.m, remaining, params.d + 1)).min(1.0)
        })
        .collect())
}

pub fn expected_iterations_clustering(params: &TheoryParams) -> Result<ClusteringExpectation> {
    let stage_probabilities = stage_probabilities(params)?;
    let expected = stage_probabilities.iter().map(|t| 1.0 / t).sum::<f64>();
    let bound = params.k as f64 * expected_iterations_recovery(params.n, params.m, params.d)?;
    debug_assert!(
        expected <= bound * (1.0 + 1e-12),
        "stage-wise mean {expected} exceeds K/theta1 = {bound}"
    );
    Ok(ClusteringExpectation {
        expected,
        bound,
        stage_probabilities,
    })
}

/// Outcome of comparing samples against a geometric law.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricFit {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub mean_z: f64,
    pub var_z: f64,
    pub pass: bool,
}

/// z-scores of the sample mean against `1/theta` and of the unbiased sample
/// variance against `(1-theta)/theta^2`; passes when both are within 3.
///
/// Standard errors use the moments of the hypothesised law: `sigma^2 / N` for
/// the mean and `(mu4 - sigma^4) / N` for the variance, with
/// `mu4 = sigma^4 (9 + theta^2 / (1 - theta))`.
pub fn geometric_fit_test(samples: &[u64], theta: f64) -> Result<GeometricFit> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    if samples.len() < 100 {
        return Err(Error::invalid(format!(
            "need at least 100 samples, got {}",
            samples.len()
        )));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid(format!("theta must be in (0, 1], got {theta}")));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&x| x as f64).sum::<f64>() / n;
    let variance = samples
        .iter()
        .map(|&x| (x as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);

    let target_mean = 1.0 / theta;
    let target_var = (1.0 - theta) / (theta * theta);
    let (mean_z, var_z) = if target_var == 0.0 {
        let z = |dev: f64| if dev == 0.0 { 0.0 } else { f64::INFINITY };
        (z(mean - target_mean), z(variance))
    } else {
        let se_mean = (target_var / n).sqrt();
        let kurt = 9.0 + theta * theta / (1.0 - theta);
        let se_var = (target_var * target_var * (kurt - 1.0) / n).sqrt();
        ((mean - target_mean) / se_mean, (variance - target_var) / se_var)
    };
    Ok(GeometricFit {
        samples: samples.len(),
        mean,
        variance,
        mean_z,
        var_z,
        pass: mean_z.abs() <= 3.0 && var_z.abs() <= 3.0,
    })
}
