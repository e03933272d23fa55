//! Subspace clustering: sequential RANSAC, the Hardt–Moitra based variant with
//! minimum dependent subsets, and a noiseless spectral curvature clustering.

mod scc;

pub use scc::{scc_affinity, scc_cluster, spectral_partition, spectral_partition_with, AffinityMatrix};

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, orthonormal_basis, PointCloud, Subspace};
use crate::metrics::LabelVector;
use crate::recovery::{extract_dependent_subset, find_dependent_tuple, members_of, IterationBudget, RansacConfig};
use crate::sampling::TupleSampler;

/// Subsets examined by [`minimum_dependent_subset`] before giving up, by default.
pub const DEFAULT_SEARCH_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// Recovered subspaces; label `k` refers to `subspaces[k - 1]`.
    pub subspaces: Vec<Subspace>,
    pub labels: LabelVector,
    /// Total tuple draws (for spectral clustering: the number of sampled tuples).
    pub iterations: u64,
    /// Draws spent before each subspace was found.
    pub stage_iterations: Vec<u64>,
    pub elapsed: Duration,
}

/// Sequential RANSAC: find a dependent `(d+1)`-tuple among the remaining
/// points, take its span as a subspace, remove every point on it, repeat `k`
/// times. Points left over are outliers.
pub fn ransac_cluster<R: Rng + ?Sized>(
    cloud: &PointCloud,
    d: usize,
    k: usize,
    cfg: &RansacConfig,
    rng: &mut R,
) -> Result<ClusteringResult> {
    cfg.validate()?;
    let (n, p) = (cloud.len(), cloud.ambient_dim());
    if d == 0 || d >= p {
        return Err(Error::invalid(format!("need 1 <= d < p, got d={d} p={p}")));
    }
    if k == 0 {
        return Err(Error::invalid("need at least one subspace"));
    }
    if n < k * (d + 1) {
        return Err(Error::invalid(format!("need n >= K(d+1), got n={n}")));
    }
    let start = Instant::now();
    let mut working: Vec<usize> = (0..n).collect();
    let mut labels = LabelVector::outliers(n);
    let mut subspaces = Vec::with_capacity(k);
    let mut stage_iterations = Vec::with_capacity(k);
    let mut budget = IterationBudget::new(cfg.max_iterations);

    for stage in 1..=k {
        if working.len() < d + 1 {
            return Err(Error::InfeasibleScene(format!(
                "only {} points left before subspace {stage}",
                working.len()
            )));
        }
        let before = budget.used();
        let mut sampler = TupleSampler::new(working.len(), d + 1, cfg.replacement)?;
        let tuple = find_dependent_tuple(cloud, &working, &mut sampler, cfg.rel_tol, &mut budget, None, rng)?
            .expect("unlimited search only returns on success");
        let s = orthonormal_basis(&cloud.gather(&tuple), cfg.rel_tol)?;
        let members = members_of(cloud, &working, &s, cfg.membership_tol)?;
        for &i in &members {
            labels.as_mut_slice()[i] = stage as u32;
        }
        working.retain(|i| members.binary_search(i).is_err());
        subspaces.push(s);
        stage_iterations.push(budget.used() - before);
    }
    Ok(ClusteringResult {
        subspaces,
        labels,
        iterations: budget.used(),
        stage_iterations,
        elapsed: start.elapsed(),
    })
}

/// Smallest linearly dependent subset of the columns of `tuple`, ties broken
/// by lexicographic order of the column positions.
///
/// Subsets are enumerated by increasing cardinality. Only columns that take
/// part in some dependency (the support of the null space) can belong to a
/// minimal one, so the enumeration is restricted to them; the order among the
/// remaining subsets is unchanged. `budget` caps the number of rank tests.
pub fn minimum_dependent_subset(tuple: &DMatrix<f64>, rel_tol: f64, budget: u64) -> Result<Vec<usize>> {
    let candidates = extract_dependent_subset(tuple, rel_tol)?;
    let mut examined = 0u64;
    for size in 1..=candidates.len() {
        let mut pick: Vec<usize> = (0..size).collect();
        loop {
            if examined >= budget {
                return Err(Error::SearchBudget { examined });
            }
            examined += 1;
            let subset: Vec<usize> = pick.iter().map(|&i| candidates[i]).collect();
            let cols = tuple.select_columns(subset.iter());
            if numerical_rank(&cols, rel_tol)? < size {
                return Ok(subset);
            }
            let c = candidates.len();
            let Some(i) = (0..size).rev().find(|&i| pick[i] < c - size + i) else {
                break;
            };
            pick[i] += 1;
            for j in (i + 1)..size {
                pick[j] = pick[j - 1] + 1;
            }
        }
    }
    Err(Error::ContractViolation(
        "no dependent subset among the null-space support".into(),
    ))
}

/// Clustering built on Hardt–Moitra sampling: draw `p`-tuples from the
/// remaining points until one is dependent, then repeatedly peel off the
/// smallest dependent subset of the tuple, take its span as a subspace and
/// remove that subspace's points, until the tuple is independent. Subspace
/// dimensions are not inputs and may differ.
pub fn hm_cluster<R: Rng + ?Sized>(
    cloud: &PointCloud,
    k: usize,
    cfg: &RansacConfig,
    search_budget: u64,
    rng: &mut R,
) -> Result<ClusteringResult> {
    cfg.validate()?;
    let (n, p) = (cloud.len(), cloud.ambient_dim());
    if k == 0 {
        return Err(Error::invalid("need at least one subspace"));
    }
    if n <= p {
        return Err(Error::invalid(format!("need n > p, got n={n} p={p}")));
    }
    let start = Instant::now();
    let mut working: Vec<usize> = (0..n).collect();
    let mut labels = LabelVector::outliers(n);
    let mut subspaces: Vec<Subspace> = Vec::with_capacity(k);
    let mut stage_iterations = Vec::with_capacity(k);
    let mut budget = IterationBudget::new(cfg.max_iterations);

    while subspaces.len() < k {
        if working.len() < p {
            return Err(Error::InfeasibleScene(format!(
                "only {} points left, cannot draw a {p}-tuple",
                working.len()
            )));
        }
        let before = budget.used();
        let mut sampler = TupleSampler::new(working.len(), p, cfg.replacement)?;
        let mut tuple = find_dependent_tuple(cloud, &working, &mut sampler, cfg.rel_tol, &mut budget, None, rng)?
            .expect("unlimited search only returns on success");
        let mut first = true;
        while subspaces.len() < k && !tuple.is_empty() {
            let m = cloud.gather(&tuple);
            if numerical_rank(&m, cfg.rel_tol)? == tuple.len() {
                break;
            }
            let subset = minimum_dependent_subset(&m, cfg.rel_tol, search_budget)?;
            let spanning: Vec<usize> = subset.iter().map(|&i| tuple[i]).collect();
            let s = orthonormal_basis(&cloud.gather(&spanning), cfg.rel_tol)?;
            let members = members_of(cloud, &working, &s, cfg.membership_tol)?;
            let label = subspaces.len() as u32 + 1;
            for &i in &members {
                labels.as_mut_slice()[i] = label;
            }
            working.retain(|i| members.binary_search(i).is_err());
            tuple.retain(|i| members.binary_search(i).is_err());
            subspaces.push(s);
            stage_iterations.push(if first { budget.used() - before } else { 0 });
            first = false;
        }
    }
    Ok(ClusteringResult {
        subspaces,
        labels,
        iterations: budget.used(),
        stage_iterations,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{make_scene, make_scene_with, AuditPolicy, SceneLayout};
    use crate::metrics::{rand_index, recovery_angle};
    use crate::recovery::{hardt_moitra_recover, ransac_recover};
    use crate::sampling::RngStream;
    use crate::theory::TheoryParams;
    use subspace_testkit as oracle;

    fn cols(columns: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_vec(columns[0].len(), columns.len(), columns.concat())
    }

    // exact over the rationals; only meaningful for exactly representable dependencies
    fn exact_min(m: &DMatrix<f64>) -> Vec<usize> {
        let columns: Vec<Vec<f64>> = m.column_iter().map(|c| c.iter().copied().collect()).collect();
        oracle::exact_min_dependent_subset(&oracle::columns_from_f64(&columns)).unwrap()
    }

    #[test]
    fn single_subspace_matches_recovery() {
        let params = TheoryParams::recovery(2, 5, 20, 10).unwrap();
        let scene = make_scene(&params, RngStream::new(1, 0)).unwrap();
        let cfg = RansacConfig::default();
        let c = ransac_cluster(&scene.points, 2, 1, &cfg, &mut RngStream::new(1, 1).generator()).unwrap();
        let r = ransac_recover(&scene.points, 2, &cfg, &mut RngStream::new(1, 1).generator()).unwrap();
        assert_eq!(c.subspaces[0], r.subspace);
        assert_eq!(c.iterations, r.iterations);
        assert_eq!(scene.members(1), r.inlier_indices);
        assert_eq!(c.labels, scene.labels);
    }

    #[test]
    fn table_row_is_clustered_exactly() {
        let params = TheoryParams::new(4, 8, 3, 50, 50).unwrap();
        let scene = make_scene_with(&params.into(), RngStream::new(2, 0), &AuditPolicy::sampled(1_000)).unwrap();
        let c = ransac_cluster(&scene.points, 4, 3, &RansacConfig::default(), &mut RngStream::new(2, 1).generator())
            .unwrap();
        assert_eq!(rand_index(&c.labels, &scene.labels).unwrap(), 1.0);
        assert_eq!(c.stage_iterations.len(), 3);
        assert_eq!(c.stage_iterations.iter().sum::<u64>(), c.iterations);
    }

    #[test]
    fn infeasible_and_invalid_inputs() {
        let params = TheoryParams::recovery(1, 3, 4, 0).unwrap();
        let scene = make_scene(&params, RngStream::new(3, 0)).unwrap();
        let cfg = RansacConfig::default();
        let mut rng = RngStream::new(3, 1).generator();
        assert!(ransac_cluster(&scene.points, 1, 3, &cfg, &mut rng).is_err());
        assert!(ransac_cluster(&scene.points, 1, 0, &cfg, &mut rng).is_err());
        // 4 inliers of one line: after removing it nothing remains for a second one
        assert!(matches!(
            ransac_cluster(&scene.points, 1, 2, &cfg, &mut rng),
            Err(Error::InfeasibleScene(_))
        ));
    }

    #[test]
    fn minimum_subset_examples() {
        let m = cols(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]);
        assert_eq!(minimum_dependent_subset(&m, 1e-9, 100).unwrap(), vec![0, 1]);
        assert_eq!(exact_min(&m), vec![0, 1]);
        assert!(matches!(
            minimum_dependent_subset(&DMatrix::identity(3, 3), 1e-9, 100),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn collinear_triple_inside_a_plane_tuple() {
        // points 0..3 lie on a plane, and 1, 2, 4 on a line inside it
        let m = cols(&[
            vec![1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 3.0, 0.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0],
        ]);
        let expected = exact_min(&m);
        assert_eq!(expected, vec![1, 2]);
        assert_eq!(minimum_dependent_subset(&m, 1e-9, 1_000).unwrap(), expected);

        let m = cols(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]);
        let expected = exact_min(&m);
        assert_eq!(expected, vec![0, 1, 2]);
        assert_eq!(minimum_dependent_subset(&m, 1e-9, 1_000).unwrap(), expected);
    }

    #[test]
    fn mixed_tuple_matches_exact_minimum() {
        // d_j + 1 points of L_j and d_k + 1 points of L_k, d_j + d_k < p,
        // padded with outliers, in integer coordinates
        for (p, dims) in [(8usize, [2usize, 4usize]), (6, [1, 3]), (10, [3, 3]), (7, [2, 2])] {
            for seed in 0..25 {
                let counts = [dims[0] + 1, dims[1] + 1];
                let outliers = p - counts[0] - counts[1];
                let (cols, labels) = oracle::integer_scene(p, &dims, &counts, outliers, seed);
                let m = DMatrix::from_fn(p, cols.len(), |r, c| cols[c][r] as f64);
                let expected = oracle::exact_min_dependent_subset(&oracle::columns_from_i64(&cols)).unwrap();
                let got = minimum_dependent_subset(&m, 1e-9, 1_000_000).unwrap();
                assert_eq!(got, expected, "p={p} dims={dims:?} seed={seed}");
                if expected.len() == dims[0].min(dims[1]) + 1 {
                    let label = labels[expected[0]];
                    assert!(label != 0 && expected.iter().all(|&i| labels[i] == label));
                }
            }
        }
    }

    #[test]
    fn mixed_generated_tuple_yields_the_smaller_subspace() {
        let layout = SceneLayout::new(8, vec![2, 4], vec![3, 5], 8).unwrap();
        let scene = make_scene_with(&layout, RngStream::new(4, 0), &AuditPolicy::sampled(500)).unwrap();
        let mut tuple = scene.members(1);
        tuple.extend(scene.members(2));
        let m = scene.points.gather(&tuple);
        let got = minimum_dependent_subset(&m, 1e-9, 10_000).unwrap();
        assert_eq!(got, vec![0, 1, 2]);
        let s = orthonormal_basis(&scene.points.gather(&tuple[..3]), 1e-9).unwrap();
        assert!(recovery_angle(&s, &scene.subspaces[0]).unwrap() <= 1e-8);
    }

    #[test]
    fn search_budget_is_enforced() {
        let m = cols(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
        ]);
        assert_eq!(
            minimum_dependent_subset(&m, 1e-9, 2),
            Err(Error::SearchBudget { examined: 2 })
        );
    }

    #[test]
    fn hm_cluster_single_subspace_matches_hm_recovery() {
        let params = TheoryParams::recovery(2, 6, 30, 20).unwrap();
        let scene = make_scene(&params, RngStream::new(5, 0)).unwrap();
        let cfg = RansacConfig::default();
        for t in 0..50 {
            let c = hm_cluster(&scene.points, 1, &cfg, DEFAULT_SEARCH_BUDGET, &mut RngStream::new(5, t).generator())
                .unwrap();
            let r = hardt_moitra_recover(&scene.points, &cfg, &mut RngStream::new(5, t).generator()).unwrap();
            assert_eq!(c.iterations, r.iterations);
            assert!(recovery_angle(&c.subspaces[0], &r.subspace).unwrap() <= 1e-8);
            assert_eq!(scene.members(1), r.inlier_indices);
        }
    }

    #[test]
    fn hm_cluster_recovers_mixed_dimensions() {
        let layout = SceneLayout::new(6, vec![1, 2], vec![20, 20], 20).unwrap();
        let scene = make_scene_with(&layout, RngStream::new(6, 0), &AuditPolicy::default()).unwrap();
        let c = hm_cluster(&scene.points, 2, &RansacConfig::default(), DEFAULT_SEARCH_BUDGET, &mut RngStream::new(6, 1).generator())
            .unwrap();
        assert_eq!(rand_index(&c.labels, &scene.labels).unwrap(), 1.0);
        for truth in &scene.subspaces {
            let best = c
                .subspaces
                .iter()
                .map(|s| recovery_angle(s, truth).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-8);
        }
    }
}
