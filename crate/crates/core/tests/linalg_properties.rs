use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use subspace_ransac::datagen::random_subspace;
use subspace_ransac::linalg::{
    is_linearly_dependent, numerical_rank, principal_angles, residual_distance, PointTuple, DEFAULT_REL_TOL,
};
use subspace_ransac::RngStream;
use subspace_testkit::{self as oracle, SplitMix};

fn integer_matrix(rng: &mut SplitMix, p: usize, q: usize, r: i64) -> Vec<Vec<i64>> {
    (0..q).map(|_| (0..p).map(|_| rng.int(r)).collect()).collect()
}

fn as_f64(cols: &[Vec<i64>]) -> Vec<Vec<f64>> {
    cols.iter().map(|c| c.iter().map(|&x| x as f64).collect()).collect()
}

#[test]
fn dependence_agrees_with_exact_elimination() {
    let mut rng = SplitMix::new(17);
    let mut cases = 0;
    let mut dependent = 0;
    while cases < 12_000 {
        let p = 1 + (rng.next_u64() % 6) as usize;
        let q = 1 + (rng.next_u64() % p as u64) as usize;
        let mut cols = integer_matrix(&mut rng, p, q, 3);
        // plant a dependency in a third of the cases so both outcomes are exercised
        if q >= 2 && rng.next_u64() % 3 == 0 {
            let (a, b) = (rng.int(2), rng.int(2));
            cols[q - 1] = (0..p).map(|r| a * cols[0][r] + b * cols[1 % (q - 1)][r]).collect();
        }
        let expected = oracle::exact_dependent(&oracle::columns_from_i64(&cols));
        let tuple = PointTuple::from_vectors(&as_f64(&cols)).unwrap();
        assert_eq!(is_linearly_dependent(&tuple, DEFAULT_REL_TOL).unwrap(), expected, "{cols:?}");
        dependent += usize::from(expected);
        cases += 1;
    }
    assert!(dependent > 2_000 && dependent < 10_000);
}

#[test]
fn rank_agrees_with_exact_elimination() {
    let mut rng = SplitMix::new(18);
    for _ in 0..5_000 {
        let p = 1 + (rng.next_u64() % 8) as usize;
        let q = 1 + (rng.next_u64() % p as u64) as usize;
        let r = 1 + (rng.next_u64() % 3) as i64;
        let cols = integer_matrix(&mut rng, p, q, r);
        let m = DMatrix::from_fn(p, q, |i, j| cols[j][i] as f64);
        assert_eq!(
            numerical_rank(&m, DEFAULT_REL_TOL).unwrap(),
            oracle::exact_rank(&oracle::columns_from_i64(&cols))
        );
    }
}

fn random_matrix(p: usize, q: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = RngStream::new(seed, 0).generator();
    // mix full-rank and rank-deficient cases
    let rank = rng.random_range(1..=q);
    let a = DMatrix::from_fn(p, rank, |_, _| rng.random_range(-1.0..1.0));
    let b = DMatrix::from_fn(rank, q, |_, _| rng.random_range(-1.0..1.0));
    a * b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rank_invariant_under_permutation_and_scaling(
        (p, q) in (1usize..8).prop_flat_map(|p| (Just(p), 1..=p)),
        seed in any::<u64>(),
        perm_seed in any::<u64>(),
        scales in prop::collection::vec(prop_oneof![0.5f64..2.0, -2.0f64..-0.5], 8),
    ) {
        let m = random_matrix(p, q, seed);
        let rank = numerical_rank(&m, DEFAULT_REL_TOL).unwrap();
        let mut order: Vec<usize> = (0..q).collect();
        let mut rng = SplitMix::new(perm_seed);
        for i in (1..q).rev() {
            order.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
        }
        let transformed = DMatrix::from_fn(p, q, |r, c| m[(r, order[c])] * scales[c]);
        prop_assert_eq!(numerical_rank(&transformed, DEFAULT_REL_TOL).unwrap(), rank);
    }

    #[test]
    fn angles_of_a_subspace_with_itself_vanish(
        (p, d) in (2usize..12).prop_flat_map(|p| (Just(p), 1..p)),
        seed in any::<u64>(),
    ) {
        let s = random_subspace(p, d, &mut RngStream::new(seed, 1).generator()).unwrap();
        for a in principal_angles(&s, &s).unwrap() {
            prop_assert!(a.abs() <= 1e-10);
        }
    }

    #[test]
    fn largest_angle_is_symmetric(
        (p, d1, d2) in (2usize..12).prop_flat_map(|p| (Just(p), 1..p, 1..p)),
        seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed, 2).generator();
        let s1 = random_subspace(p, d1, &mut rng).unwrap();
        let s2 = random_subspace(p, d2, &mut rng).unwrap();
        let a = principal_angles(&s1, &s2).unwrap();
        let b = principal_angles(&s2, &s1).unwrap();
        prop_assert_eq!(a.len(), d1.min(d2));
        prop_assert!((a.last().unwrap() - b.last().unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn combinations_of_the_basis_have_zero_residual(
        (p, d) in (2usize..12).prop_flat_map(|p| (Just(p), 1..p)),
        seed in any::<u64>(),
        coef in prop::collection::vec(-10.0f64..10.0, 11),
    ) {
        let s = random_subspace(p, d, &mut RngStream::new(seed, 3).generator()).unwrap();
        let x = s.basis() * nalgebra::DVector::from_column_slice(&coef[..d]);
        prop_assert!(residual_distance(x.as_slice(), &s).unwrap() <= 1e-10);
    }
}
