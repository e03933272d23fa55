//! Noiseless spectral curvature clustering: a binary dependence affinity built
//! from random `d`-tuples, followed by normalized spectral partitioning.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ClusteringResult;
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, orthonormal_basis, symmetric_eigen, PointCloud};
use crate::metrics::{LabelVector, OUTLIER};
use crate::sampling::{sample_tuple, TupleDraw};

/// Restarts of the center-based clustering step.
pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_STEPS: usize = 200;
const PARTITION_SEED: u64 = 0x5eed_5cc0;

/// Pairwise co-dependence counts over `c` sampled tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    /// Symmetric, zero diagonal, entries at most `c`.
    pub w: DMatrix<u32>,
    pub c: usize,
    /// The sampled `d`-tuples, in draw order.
    pub tuples: Vec<TupleDraw>,
}

impl AffinityMatrix {
    /// Wraps a precomputed matrix; checks symmetry and the zero diagonal.
    pub fn from_weights(w: DMatrix<u32>, c: usize) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::invalid("affinity matrix must be square"));
        }
        let n = w.nrows();
        for i in 0..n {
            if w[(i, i)] != 0 {
                return Err(Error::invalid("affinity diagonal must be zero"));
            }
            for j in 0..i {
                if w[(i, j)] != w[(j, i)] {
                    return Err(Error::invalid("affinity matrix must be symmetric"));
                }
            }
        }
        Ok(Self { w, c, tuples: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.nrows() == 0
    }

    pub fn degrees(&self) -> Vec<u64> {
        self.w
            .row_iter()
            .map(|r| r.iter().map(|&x| u64::from(x)).sum())
            .collect()
    }
}

/// Points outside `tuple` that are linearly dependent with it.
fn dependents(cloud: &PointCloud, tuple: &[usize], rel_tol: f64) -> Result<Vec<usize>> {
    let p = cloud.ambient_dim();
    let d = tuple.len();
    let mut m = DMatrix::zeros(p, d + 1);
    for (c, &i) in tuple.iter().enumerate() {
        m.column_mut(c).copy_from_slice(cloud.point(i));
    }
    let mut out = Vec::new();
    for i in 0..cloud.len() {
        if tuple.binary_search(&i).is_ok() {
            continue;
        }
        m.column_mut(d).copy_from_slice(cloud.point(i));
        if numerical_rank(&m, rel_tol)? <= d {
            out.push(i);
        }
    }
    Ok(out)
}

/// Draws `c` uniformly random `d`-subsets and counts, for every pair `i != j`,
/// the tuples (containing neither point) with which both points are dependent.
pub fn scc_affinity<R: Rng + ?Sized>(
    cloud: &PointCloud,
    d: usize,
    c: usize,
    rel_tol: f64,
    rng: &mut R,
) -> Result<AffinityMatrix> {
    let n = cloud.len();
    if c == 0 || d == 0 {
        return Err(Error::invalid("need c >= 1 and d >= 1"));
    }
    if d >= cloud.ambient_dim() {
        return Err(Error::invalid(format!("need d < p, got d={d}")));
    }
    if n <= d {
        return Err(Error::invalid(format!("need n > d, got n={n} d={d}")));
    }
    if !(rel_tol > 0.0 && rel_tol.is_finite()) {
        return Err(Error::invalid("rel_tol must be positive and finite"));
    }
    let tuples = (0..c).map(|_| sample_tuple(n, d, rng)).collect::<Result<Vec<_>>>()?;
    let w = tuples
        .par_iter()
        .try_fold(
            || DMatrix::<u32>::zeros(n, n),
            |mut w, t| {
                let dep = dependents(cloud, t.indices(), rel_tol)?;
                for (a, &i) in dep.iter().enumerate() {
                    for &j in &dep[a + 1..] {
                        w[(i, j)] += 1;
                        w[(j, i)] += 1;
                    }
                }
                Ok::<_, Error>(w)
            },
        )
        .try_reduce(|| DMatrix::zeros(n, n), |a, b| Ok(a + b))?;
    Ok(AffinityMatrix { w, c, tuples })
}

/// [`spectral_partition_with`] using the default restarts and seed.
pub fn spectral_partition(aff: &AffinityMatrix, k: usize) -> Result<LabelVector> {
    spectral_partition_with(aff, k, KMEANS_RESTARTS, PARTITION_SEED)
}

/// Labels `1..=k` from the top-`k` eigenvectors of `D^{-1/2} W D^{-1/2}`,
/// row-normalized and grouped by seeded k-means. Zero-degree points are
/// outliers. Labels are numbered by first appearance.
pub fn spectral_partition_with(aff: &AffinityMatrix, k: usize, restarts: usize, seed: u64) -> Result<LabelVector> {
    if k == 0 || restarts == 0 {
        return Err(Error::invalid("need k >= 1 and at least one restart"));
    }
    let n = aff.len();
    let degrees = aff.degrees();
    let active: Vec<usize> = (0..n).filter(|&i| degrees[i] > 0).collect();
    if active.len() < k {
        return Err(Error::InfeasiblePartition {
            nonzero: active.len(),
            k,
        });
    }
    let a = active.len();
    let scale: Vec<f64> = active.iter().map(|&i| 1.0 / (degrees[i] as f64).sqrt()).collect();
    let normalized = DMatrix::from_fn(a, a, |r, c| f64::from(aff.w[(active[r], active[c])]) * scale[r] * scale[c]);
    let (values, vectors) = symmetric_eigen(&normalized)?;
    let mut order: Vec<usize> = (0..a).collect();
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
    let mut embedding = DMatrix::from_fn(a, k, |r, c| vectors[(r, order[c])]);
    for mut row in embedding.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let rows: Vec<Vec<f64>> = embedding.row_iter().map(|r| r.iter().copied().collect()).collect();
    let assignment = kmeans(&rows, k, restarts, seed);

    let mut labels = LabelVector::outliers(n);
    let mut canonical: HashMap<usize, u32> = HashMap::new();
    for (r, &i) in active.iter().enumerate() {
        let next = canonical.len() as u32 + 1;
        labels.as_mut_slice()[i] = *canonical.entry(assignment[r]).or_insert(next);
    }
    Ok(labels)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iterations from k-means++ seeds; the lowest-inertia restart wins.
fn kmeans(rows: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts {
        let (inertia, assign) = lloyd(rows, plus_plus_seeds(rows, k, &mut rng));
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, assign));
        }
    }
    best.map(|(_, a)| a).unwrap_or_default()
}

fn plus_plus_seeds<R: Rng>(rows: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centers = vec![rows[rng.random_range(0..rows.len())].clone()];
    let mut nearest: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = rows.len() - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..rows.len())
        };
        centers.push(rows[pick].clone());
        for (dist, r) in nearest.iter_mut().zip(rows) {
            *dist = dist.min(sq_dist(r, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd(rows: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> (f64, Vec<usize>) {
    let k = centers.len();
    let dim = rows[0].len();
    let mut assign = vec![usize::MAX; rows.len()];
    for _ in 0..KMEANS_MAX_STEPS {
        let mut changed = false;
        for (a, r) in assign.iter_mut().zip(rows) {
            let c = (0..k)
                .min_by(|&x, &y| sq_dist(r, &centers[x]).total_cmp(&sq_dist(r, &centers[y])))
                .unwrap_or(0);
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, r) in assign.iter().zip(rows) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(r) {
                *s += x;
            }
        }
        for c in 0..k {
            // an emptied cluster keeps its previous center
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = assign.iter().zip(rows).map(|(&a, r)| sq_dist(r, &centers[a])).sum();
    (inertia, assign)
}

/// Affinity followed by spectral partitioning. Each cluster's subspace is the
/// span of its members; `iterations` is the number of sampled tuples.
pub fn scc_cluster<R: Rng + ?Sized>(
    cloud: &PointCloud,
    d: usize,
    k: usize,
    c: usize,
    rel_tol: f64,
    rng: &mut R,
) -> Result<(ClusteringResult, AffinityMatrix)> {
    let start = Instant::now();
    let aff = scc_affinity(cloud, d, c, rel_tol, rng)?;
    let labels = spectral_partition(&aff, k)?;
    let mut subspaces = Vec::with_capacity(k);
    for label in 1..=k as u32 {
        let members: Vec<usize> = (0..cloud.len()).filter(|&i| labels.as_slice()[i] == label).collect();
        if members.is_empty() {
            continue;
        }
        subspaces.push(orthonormal_basis(&cloud.gather(&members), rel_tol)?);
    }
    debug_assert!(labels.as_slice().iter().all(|&l| l == OUTLIER || l as usize <= k));
    let result = ClusteringResult {
        subspaces,
        labels,
        iterations: c as u64,
        stage_iterations: vec![c as u64],
        elapsed: start.elapsed(),
    };
    Ok((result, aff))
}
