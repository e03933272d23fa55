use subspace_ransac::datagen::{make_scene_with, AuditPolicy};
use subspace_ransac::linalg::{numerical_rank, DEFAULT_REL_TOL};
use subspace_ransac::metrics::recovery_angle;
use subspace_ransac::sampling::sample_tuple;
use subspace_ransac::theory::{geometric_fit_test, stage_probabilities, theta1, theta2, expected_iterations_clustering};
use subspace_ransac::{
    hardt_moitra_recover, ransac_cluster, ransac_recover, RansacConfig, ReplacementMode, RngStream, Scene,
    TheoryParams,
};

fn mean_se(xs: &[u64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn scene(d: usize, p: usize, k: usize, m: usize, m0: usize, seed: u64) -> Scene {
    let params = TheoryParams::new(d, p, k, m, m0).unwrap();
    make_scene_with(&params.into(), RngStream::new(seed, 0), &AuditPolicy::sampled(2_000)).unwrap()
}

fn recovery_iterations(scene: &Scene, d: usize, cfg: &RansacConfig, trials: u64, seed: u64) -> Vec<u64> {
    (0..trials)
        .map(|t| {
            ransac_recover(&scene.points, d, cfg, &mut RngStream::new(seed, t).generator())
                .unwrap()
                .iterations
        })
        .collect()
}

#[test]
fn ransac_iterations_are_geometric() {
    for (n, m, d, p) in [(10, 5, 1, 3), (30, 20, 2, 5), (24, 18, 3, 6)] {
        let s = scene(d, p, 1, m, n - m, 100 + n as u64);
        let iters = recovery_iterations(&s, d, &RansacConfig::default(), 10_000, 7);
        let fit = geometric_fit_test(&iters, theta1(n, m, d).unwrap()).unwrap();
        assert!(fit.pass, "(n,m,d)=({n},{m},{d}): {fit:?}");
    }
}

#[test]
fn single_draw_is_dependent_with_probability_theta1() {
    let (n, m, d) = (20, 12, 2);
    let s = scene(d, 6, 1, m, n - m, 3);
    let mut rng = RngStream::new(3, 1).generator();
    let draws = 100_000;
    let hits = (0..draws)
        .filter(|_| {
            let t = sample_tuple(n, d + 1, &mut rng).unwrap();
            numerical_rank(&s.points.gather(t.indices()), DEFAULT_REL_TOL).unwrap() < d + 1
        })
        .count();
    let theta = theta1(n, m, d).unwrap();
    let sigma = (theta * (1.0 - theta) / draws as f64).sqrt();
    assert!((hits as f64 / draws as f64 - theta).abs() <= 3.0 * sigma);
}

#[test]
fn without_replacement_needs_no_more_iterations() {
    let (n, m, d) = (12, 6, 1);
    let s = scene(d, 4, 1, m, n - m, 4);
    let with = recovery_iterations(&s, d, &RansacConfig::default(), 5_000, 8);
    let cfg = RansacConfig::default().with_replacement(ReplacementMode::Without);
    let without = recovery_iterations(&s, d, &cfg, 5_000, 9);
    let (mw, sw) = mean_se(&with);
    let (mo, so) = mean_se(&without);
    assert!(mo <= mw + 3.0 * (sw * sw + so * so).sqrt(), "without {mo} vs with {mw}");
    // C(12,2) = 66, C(6,2) = 15: worst case 52 draws, mean 67/16
    assert!(without.iter().all(|&x| x <= 52));
    assert!((mo - 67.0 / 16.0).abs() <= 3.0 * so);
}

#[test]
fn hm_iterations_are_geometric_in_theta2() {
    let (n, m, d, p) = (20, 10, 2, 5);
    let s = scene(d, p, 1, m, n - m, 5);
    let iters: Vec<u64> = (0..10_000)
        .map(|t| {
            hardt_moitra_recover(&s.points, &RansacConfig::default(), &mut RngStream::new(10, t).generator())
                .unwrap()
                .iterations
        })
        .collect();
    let fit = geometric_fit_test(&iters, theta2(n, m, d, p).unwrap()).unwrap();
    assert!(fit.pass, "{fit:?}");
}

#[test]
fn hm_returns_the_true_dimension() {
    for (d, p, m, m0) in [(1, 4, 10, 5), (3, 6, 20, 10), (5, 8, 30, 10)] {
        let s = scene(d, p, 1, m, m0, 6 + d as u64);
        for t in 0..20 {
            let r = hardt_moitra_recover(&s.points, &RansacConfig::default(), &mut RngStream::new(11, t).generator())
                .unwrap();
            assert_eq!(r.subspace.dim(), d);
            assert!(recovery_angle(&r.subspace, &s.subspaces[0]).unwrap() <= 1e-8);
        }
    }
}

#[test]
fn clustering_stages_follow_their_geometric_laws() {
    let params = TheoryParams::new(1, 3, 2, 5, 0).unwrap();
    let s = scene(1, 3, 2, 5, 0, 12);
    let runs: Vec<_> = (0..10_000)
        .map(|t| {
            ransac_cluster(&s.points, 1, 2, &RansacConfig::default(), &mut RngStream::new(12, t).generator()).unwrap()
        })
        .collect();
    let totals: Vec<u64> = runs.iter().map(|r| r.iterations).collect();
    let (mean, se) = mean_se(&totals);
    let expect = expected_iterations_clustering(&params).unwrap();
    assert!((expect.expected - 3.25).abs() < 1e-12);
    assert!((mean - 3.25).abs() <= 3.0 * se, "mean {mean} se {se}");
    assert!(mean <= expect.bound + 3.0 * se);
    for (j, theta) in stage_probabilities(&params).unwrap().into_iter().enumerate() {
        let stage: Vec<u64> = runs.iter().map(|r| r.stage_iterations[j]).collect();
        let fit = geometric_fit_test(&stage, theta).unwrap();
        assert!(fit.pass, "stage {}: {fit:?}", j + 1);
    }
}

#[test]
fn clustering_stage_law_with_outliers_and_three_subspaces() {
    let params = TheoryParams::new(2, 5, 3, 8, 6).unwrap();
    let s = scene(2, 5, 3, 8, 6, 13);
    let runs: Vec<_> = (0..10_000)
        .map(|t| {
            ransac_cluster(&s.points, 2, 3, &RansacConfig::default(), &mut RngStream::new(13, t).generator()).unwrap()
        })
        .collect();
    for (j, theta) in stage_probabilities(&params).unwrap().into_iter().enumerate() {
        let stage: Vec<u64> = runs.iter().map(|r| r.stage_iterations[j]).collect();
        let fit = geometric_fit_test(&stage, theta).unwrap();
        assert!(fit.pass, "stage {}: {fit:?}", j + 1);
    }
}

#[test]
fn recovery_is_exact_on_table_rows() {
    for (d, p, m, m0) in [(8, 10, 100, 50), (4, 10, 100, 50), (8, 20, 100, 50), (6, 10, 100, 20), (9, 10, 100, 50)] {
        for trial in 0..5 {
            let params = TheoryParams::recovery(d, p, m, m0).unwrap();
            let s = make_scene_with(&params.into(), RngStream::new(20, trial), &AuditPolicy::sampled(200)).unwrap();
            let truth = s.members(1);
            let cfg = RansacConfig::default();
            let r = ransac_recover(&s.points, d, &cfg, &mut RngStream::new(21, trial).generator()).unwrap();
            assert!(recovery_angle(&r.subspace, &s.subspaces[0]).unwrap() <= 1e-8);
            assert_eq!(r.inlier_indices, truth);
            let h = hardt_moitra_recover(&s.points, &cfg, &mut RngStream::new(22, trial).generator()).unwrap();
            assert!(recovery_angle(&h.subspace, &s.subspaces[0]).unwrap() <= 1e-8);
            assert_eq!(h.inlier_indices, truth);
        }
    }
}

#[test]
fn audit_never_fires_on_generated_scenes() {
    // n <= 25 scenes are audited exhaustively, larger ones by sampling
    let strict = AuditPolicy {
        max_attempts: 1,
        ..AuditPolicy::default()
    };
    for seed in 0..1_000u64 {
        let params = match seed % 3 {
            0 => TheoryParams::new(1, 4, 2, 6, 6).unwrap(),
            1 => TheoryParams::new(2, 5, 1, 12, 8).unwrap(),
            _ => TheoryParams::new(3, 6, 2, 20, 20).unwrap(),
        };
        let layout = params.into();
        let policy = if seed % 3 == 2 { AuditPolicy { sampled_tuples: 500, ..strict } } else { strict };
        make_scene_with(&layout, RngStream::new(seed, 0), &policy).unwrap();
    }
}
