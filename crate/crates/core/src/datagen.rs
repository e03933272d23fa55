//! Synthetic noiseless scenes: planted subspaces with inliers uniform on their
//! unit spheres, outliers uniform on the unit sphere of the ambient space.

use nalgebra::{DMatrix, QR};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{is_linearly_dependent, PointCloud, PointTuple, Subspace, DEFAULT_REL_TOL};
use crate::metrics::{LabelVector, OUTLIER};
use crate::sampling::{sample_tuple, subset_count, RngStream};
use crate::theory::TheoryParams;

/// Shape of a scene: one entry per planted subspace plus the outlier count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneLayout {
    pub p: usize,
    pub dims: Vec<usize>,
    pub counts: Vec<usize>,
    pub m0: usize,
}

impl SceneLayout {
    pub fn new(p: usize, dims: Vec<usize>, counts: Vec<usize>, m0: usize) -> Result<Self> {
        if dims.len() != counts.len() {
            return Err(Error::invalid("one inlier count per subspace dimension"));
        }
        for (&d, &m) in dims.iter().zip(&counts) {
            if d == 0 || d >= p {
                return Err(Error::invalid(format!("need 1 <= d < p, got d={d} p={p}")));
            }
            if m < d + 1 {
                return Err(Error::invalid(format!("need m >= d+1, got m={m} d={d}")));
            }
        }
        Ok(Self { p, dims, counts, m0 })
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.m0
    }

    pub fn k(&self) -> usize {
        self.dims.len()
    }
}

impl From<TheoryParams> for SceneLayout {
    fn from(params: TheoryParams) -> Self {
        Self {
            p: params.p,
            dims: vec![params.d; params.k],
            counts: vec![params.m; params.k],
            m0: params.m0,
        }
    }
}

/// Point cloud together with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub points: PointCloud,
    /// `k` (1-based) for inliers of `subspaces[k-1]`, `0` for outliers.
    pub labels: LabelVector,
    pub subspaces: Vec<Subspace>,
    pub layout: SceneLayout,
}

impl Scene {
    /// Parameters of the scene when every subspace has the same dimension and size.
    pub fn theory_params(&self) -> Option<TheoryParams> {
        let d = *self.layout.dims.first()?;
        let m = *self.layout.counts.first()?;
        if self.layout.dims.iter().any(|&x| x != d) || self.layout.counts.iter().any(|&x| x != m) {
            return None;
        }
        TheoryParams::new(d, self.layout.p, self.layout.k(), m, self.layout.m0).ok()
    }

    /// Indices of the inliers of subspace `k` (1-based), ascending.
    pub fn members(&self, k: u32) -> Vec<usize> {
        self.labels
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == k)
            .map(|(i, _)| i)
            .collect()
    }
}

/// How thoroughly a freshly generated scene is checked for general position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditPolicy {
    /// Scenes with at most this many points are checked exhaustively...
    pub exhaustive_max_n: usize,
    /// ...provided the number of tuples to check stays below this.
    pub exhaustive_max_tuples: u128,
    /// Tuples drawn when the audit is sampled; 0 disables the audit.
    pub sampled_tuples: usize,
    /// Regeneration attempts before giving up.
    pub max_attempts: u32,
}

impl Default for AuditPolicy {
    fn default() -> Self {
        Self {
            exhaustive_max_n: 25,
            exhaustive_max_tuples: 200_000,
            sampled_tuples: 10_000,
            max_attempts: 8,
        }
    }
}

impl AuditPolicy {
    /// Checks `tuples` random tuples whatever the scene size.
    pub fn sampled(tuples: usize) -> Self {
        Self {
            exhaustive_max_n: 0,
            sampled_tuples: tuples,
            ..Self::default()
        }
    }

    pub fn disabled() -> Self {
        Self {
            exhaustive_max_n: 0,
            sampled_tuples: 0,
            ..Self::default()
        }
    }
}

/// Rotation-invariant random `d`-dimensional subspace of `R^p`.
pub fn random_subspace<R: Rng + ?Sized>(p: usize, d: usize, rng: &mut R) -> Result<Subspace> {
    if d == 0 || d >= p {
        return Err(Error::invalid(format!("need 1 <= d < p, got d={d} p={p}")));
    }
    let gaussian = DMatrix::<f64>::from_fn(p, d, |_, _| rng.sample(StandardNormal));
    Subspace::new(QR::new(gaussian).q())
}

/// `count` points uniform on the unit sphere of `s`, as columns of a `p x count` matrix.
pub fn sample_on_subspace_sphere<R: Rng + ?Sized>(
    s: &Subspace,
    count: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    let coeffs = DMatrix::<f64>::from_fn(s.dim(), count, |_, _| rng.sample(StandardNormal));
    let mut points = s.basis() * coeffs;
    for mut col in points.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    points
}

/// `count` points uniform on the unit sphere of `R^p`.
pub fn sample_on_sphere<R: Rng + ?Sized>(p: usize, count: usize, rng: &mut R) -> DMatrix<f64> {
    let mut points = DMatrix::<f64>::from_fn(p, count, |_, _| rng.sample(StandardNormal));
    for mut col in points.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    points
}

/// Draw a scene without auditing it.
pub fn generate_scene<R: Rng + ?Sized>(layout: &SceneLayout, rng: &mut R) -> Result<Scene> {
    let p = layout.p;
    let n = layout.n();
    let mut columns = DMatrix::<f64>::zeros(p, n);
    let mut labels = Vec::with_capacity(n);
    let mut subspaces = Vec::with_capacity(layout.k());
    let mut next = 0;
    for (k, (&d, &m)) in layout.dims.iter().zip(&layout.counts).enumerate() {
        let s = random_subspace(p, d, rng)?;
        let pts = sample_on_subspace_sphere(&s, m, rng);
        columns.columns_mut(next, m).copy_from(&pts);
        labels.extend(std::iter::repeat_n(k as u32 + 1, m));
        subspaces.push(s);
        next += m;
    }
    let outliers = sample_on_sphere(p, layout.m0, rng);
    columns.columns_mut(next, layout.m0).copy_from(&outliers);
    labels.extend(std::iter::repeat_n(OUTLIER, layout.m0));

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let shuffled = DMatrix::from_fn(p, n, |r, c| columns[(r, order[c])]);
    let labels: Vec<u32> = order.iter().map(|&i| labels[i]).collect();
    Ok(Scene {
        points: PointCloud::from_columns(shuffled)?,
        labels: LabelVector::new(labels),
        subspaces,
        layout: layout.clone(),
    })
}

/// Whether a tuple should be dependent under general position: it holds at
/// least `d_k + 1` inliers of some subspace `k`.
fn predicted_dependent(scene: &Scene, tuple: &[usize]) -> bool {
    let mut per_subspace = vec![0usize; scene.layout.k()];
    for &i in tuple {
        let l = scene.labels.as_slice()[i];
        if l != OUTLIER {
            per_subspace[l as usize - 1] += 1;
        }
    }
    per_subspace
        .iter()
        .zip(&scene.layout.dims)
        .any(|(&c, &d)| c >= d + 1)
}

fn tuple_violates(scene: &Scene, tuple: &[usize]) -> Result<bool> {
    let t = PointTuple::gather(&scene.points, tuple)?;
    Ok(is_linearly_dependent(&t, DEFAULT_REL_TOL)? != predicted_dependent(scene, tuple))
}

fn exhaustive_tuple_count(n: usize, qmax: usize) -> Option<u128> {
    (1..=qmax).try_fold(0u128, |acc, q| acc.checked_add(subset_count(n, q)?))
}

/// Tuple mixing at most `d_k` inliers per subspace with outliers; general
/// position says it must be independent.
fn boundary_tuple<R: Rng + ?Sized>(scene: &Scene, rng: &mut R) -> Vec<usize> {
    let qmax = scene.layout.p.min(scene.points.len());
    let mut groups: Vec<Vec<usize>> = (1..=scene.layout.k() as u32).map(|k| scene.members(k)).collect();
    groups.push(scene.members(OUTLIER));
    let caps: Vec<usize> = scene.layout.dims.iter().copied().chain([usize::MAX]).collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(rng);
    let mut tuple = Vec::new();
    for g in order {
        let room = qmax - tuple.len();
        let limit = caps[g].min(groups[g].len()).min(room);
        let take = rng.random_range(0..=limit);
        groups[g].shuffle(rng);
        tuple.extend_from_slice(&groups[g][..take]);
    }
    tuple
}

/// Tuple holding `d_k + 1` inliers of one subspace plus random extra points.
fn circuit_tuple<R: Rng + ?Sized>(scene: &Scene, rng: &mut R) -> Vec<usize> {
    let qmax = scene.layout.p.min(scene.points.len());
    let k = rng.random_range(0..scene.layout.k());
    let mut members = scene.members(k as u32 + 1);
    members.shuffle(rng);
    let mut tuple: Vec<usize> = members[..scene.layout.dims[k] + 1].to_vec();
    let extra = rng.random_range(0..=qmax - tuple.len());
    let mut others: Vec<usize> = (0..scene.points.len()).filter(|i| !tuple.contains(i)).collect();
    others.shuffle(rng);
    tuple.extend_from_slice(&others[..extra]);
    tuple
}

/// Check the general-position assumption; returns a violating tuple if found.
pub fn audit_general_position<R: Rng + ?Sized>(
    scene: &Scene,
    policy: &AuditPolicy,
    rng: &mut R,
) -> Result<Option<Vec<usize>>> {
    let n = scene.points.len();
    let qmax = scene.layout.p.min(n);
    let exhaustive = n <= policy.exhaustive_max_n
        && exhaustive_tuple_count(n, qmax).is_some_and(|c| c <= policy.exhaustive_max_tuples);
    if exhaustive {
        for q in 1..=qmax {
            let mut tuple: Vec<usize> = (0..q).collect();
            loop {
                if tuple_violates(scene, &tuple)? {
                    return Ok(Some(tuple));
                }
                // next combination in lexicographic order
                let Some(i) = (0..q).rev().find(|&i| tuple[i] < n - q + i) else {
                    break;
                };
                tuple[i] += 1;
                for j in (i + 1)..q {
                    tuple[j] = tuple[j - 1] + 1;
                }
            }
        }
        return Ok(None);
    }
    for t in 0..policy.sampled_tuples {
        let tuple = match t % 3 {
            0 => {
                let q = rng.random_range(1..=qmax);
                sample_tuple(n, q, rng)?.indices().to_vec()
            }
            1 => boundary_tuple(scene, rng),
            _ => circuit_tuple(scene, rng),
        };
        if tuple.is_empty() {
            continue;
        }
        if tuple_violates(scene, &tuple)? {
            return Ok(Some(tuple));
        }
    }
    Ok(None)
}

/// Generate and audit a scene, regenerating on derived substreams if the
/// audit fires.
pub fn make_scene_with(layout: &SceneLayout, stream: RngStream, policy: &AuditPolicy) -> Result<Scene> {
    let attempts = policy.max_attempts.max(1);
    for attempt in 0..attempts {
        let sub = if attempt == 0 { stream } else { stream.derive(attempt as u64) };
        let mut rng = sub.generator();
        let scene = generate_scene(layout, &mut rng)?;
        match audit_general_position(&scene, policy, &mut rng)? {
            None => return Ok(scene),
            Some(tuple) => log::warn!("general-position audit failed on tuple {tuple:?} (attempt {attempt})"),
        }
    }
    Err(Error::DegenerateScene { attempts })
}

/// Equal-dimension scene from theory parameters with the default audit.
pub fn make_scene(params: &TheoryParams, stream: RngStream) -> Result<Scene> {
    params.validate()?;
    make_scene_with(&SceneLayout::from(*params), stream, &AuditPolicy::default())
}
