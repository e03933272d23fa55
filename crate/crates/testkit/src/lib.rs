//! Exact-arithmetic oracles shared by the test suites.
//!
//! Everything here works over arbitrary-precision rationals and integers so it
//! stays independent of the floating-point code paths it is used to check.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Column-major description of a `rows x cols` matrix given as a list of columns.
pub type Columns = Vec<Vec<BigRational>>;

pub fn columns_from_i64(cols: &[Vec<i64>]) -> Columns {
    cols.iter()
        .map(|c| c.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
        .collect()
}

/// Exact conversion of finite floats to rationals.
pub fn columns_from_f64(cols: &[Vec<f64>]) -> Columns {
    cols.iter()
        .map(|c| {
            c.iter()
                .map(|&v| BigRational::from_float(v).expect("finite entry"))
                .collect()
        })
        .collect()
}

/// Rank of the matrix whose columns are `cols`, by Gaussian elimination over Q.
pub fn exact_rank(cols: &Columns) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let rows = cols[0].len();
    // work on the transpose: each column becomes a row vector
    let mut m: Vec<Vec<BigRational>> = cols.to_vec();
    let mut rank = 0;
    for c in 0..rows {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let head = m[rank][c].clone();
        for r in (rank + 1)..m.len() {
            if m[r][c].is_zero() {
                continue;
            }
            let factor = &m[r][c] / &head;
            for k in c..rows {
                let delta = &factor * &m[rank][k];
                m[r][k] -= delta;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

pub fn subset_columns(cols: &Columns, subset: &[usize]) -> Columns {
    subset.iter().map(|&i| cols[i].clone()).collect()
}

pub fn exact_dependent(cols: &Columns) -> bool {
    exact_rank(cols) < cols.len()
}

/// All k-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in (i + 1)..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Lexicographically first dependent subset of minimum cardinality, by
/// brute-force enumeration with exact ranks.
pub fn exact_min_dependent_subset(cols: &Columns) -> Option<Vec<usize>> {
    let n = cols.len();
    for k in 1..=n {
        for subset in combinations(n, k) {
            if exact_dependent(&subset_columns(cols, &subset)) {
                return Some(subset);
            }
        }
    }
    None
}

/// Echelon rows with their pivot columns.
type Echelon = Vec<(usize, Vec<BigRational>)>;

/// Reduces `v` against `basis`; `None` when `v` lies in its span.
fn extend_echelon(basis: &Echelon, v: &[BigRational]) -> Option<Echelon> {
    let mut v = v.to_vec();
    for (pivot, row) in basis {
        if v[*pivot].is_zero() {
            continue;
        }
        let factor = &v[*pivot] / &row[*pivot];
        for (x, r) in v.iter_mut().zip(row) {
            if !r.is_zero() {
                *x -= &factor * r;
            }
        }
    }
    let pivot = v.iter().position(|x| !x.is_zero())?;
    let mut out = basis.clone();
    out.push((pivot, v));
    Some(out)
}

/// Minimal dependent subsets (circuits), by exact elimination over every
/// subset. Each subset extends the echelon form of the subset without its
/// largest element.
pub fn exact_circuits(cols: &Columns) -> Vec<Vec<usize>> {
    let n = cols.len();
    assert!(n <= 16, "exhaustive subset enumeration is capped at 16 columns");
    let mut bases: Vec<Option<Echelon>> = vec![None; 1usize << n];
    bases[0] = Some(Vec::new());
    for mask in 1..(1usize << n) {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        bases[mask] = bases[mask & !(1 << top)]
            .as_ref()
            .and_then(|b| extend_echelon(b, &cols[top]));
    }
    let mut circuits: Vec<Vec<usize>> = (1..(1usize << n))
        .filter(|&mask| bases[mask].is_none() && (0..n).all(|i| mask & (1 << i) == 0 || bases[mask & !(1 << i)].is_some()))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    circuits.sort_by(|a: &Vec<usize>, b| (a.len(), a).cmp(&(b.len(), b)));
    circuits
}

/// Union of all circuits, computed as the set of non-coloops: an element lies
/// in some circuit iff removing it leaves the rank unchanged.
pub fn exact_circuit_union(cols: &Columns) -> Vec<usize> {
    let full = exact_rank(cols);
    (0..cols.len())
        .filter(|&i| {
            let rest: Vec<usize> = (0..cols.len()).filter(|&j| j != i).collect();
            exact_rank(&subset_columns(cols, &rest)) == full
        })
        .collect()
}

/// Small deterministic generator so fixtures do not depend on the code under test.
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform integer in `-r..=r`.
    pub fn int(&mut self, r: i64) -> i64 {
        (self.next_u64() % (2 * r as u64 + 1)) as i64 - r
    }
}

/// Integer points: `counts[k]` integer combinations of a random integer basis
/// of dimension `dims[k]`, then `outliers` random integer vectors, all in `Z^p`.
/// Every coordinate is exactly representable, so exact and floating-point
/// arithmetic see the same points. Returns the columns and labels (`k + 1`,
/// `0` for outliers).
pub fn integer_scene(p: usize, dims: &[usize], counts: &[usize], outliers: usize, seed: u64) -> (Vec<Vec<i64>>, Vec<u32>) {
    let mut rng = SplitMix::new(seed);
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    for (k, (&d, &m)) in dims.iter().zip(counts).enumerate() {
        let basis: Vec<Vec<i64>> = (0..d).map(|_| (0..p).map(|_| rng.int(4)).collect()).collect();
        for _ in 0..m {
            let coef: Vec<i64> = (0..d).map(|_| rng.int(5)).collect();
            cols.push((0..p).map(|r| basis.iter().zip(&coef).map(|(b, c)| b[r] * c).sum()).collect());
            labels.push(k as u32 + 1);
        }
    }
    for _ in 0..outliers {
        cols.push((0..p).map(|_| rng.int(9)).collect());
        labels.push(0);
    }
    (cols, labels)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
        .to_f64()
        .expect("representable ratio")
}

/// C(m, q) / C(n, q) as an exact rational rounded once to f64.
pub fn exact_all_inlier_probability(n: u64, m: u64, q: u64) -> f64 {
    ratio_to_f64(&binomial(m, q), &binomial(n, q))
}

/// P(U >= threshold) for U ~ Hypergeometric(population n, successes m, draws p).
pub fn exact_hypergeometric_tail(n: u64, m: u64, p: u64, threshold: u64) -> f64 {
    let mut num = BigUint::zero();
    for k in threshold..=p.min(m) {
        if p - k > n - m {
            continue;
        }
        num += binomial(m, k) * binomial(n - m, p - k);
    }
    ratio_to_f64(&num, &binomial(n, p))
}
