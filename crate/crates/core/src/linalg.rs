//! Dense numerical primitives: rank tests, orthonormal bases, residuals to a
//! subspace and principal angles.
//!
//! Points are stored column-wise (`p x n`), so a single point is a contiguous
//! slice and a tuple of points is a `p x q` matrix whose columns are the points.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value threshold separating rank deficiency from rounding noise.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Residual below which a point is considered to lie on a subspace.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;

/// Tolerance on the orthonormality of a stored basis.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// A collection of `n` points in `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: DMatrix<f64>,
}

impl PointCloud {
    /// Build from a `p x n` matrix whose columns are the points.
    pub fn from_columns(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::invalid("points must have positive dimension"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(Self { data })
    }

    /// Build from an `n x p` matrix whose rows are the points.
    pub fn from_rows(rows: &DMatrix<f64>) -> Result<Self> {
        Self::from_columns(rows.transpose())
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let p = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("empty point list"))?;
        if let Some(bad) = points.iter().find(|x| x.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: bad.len(),
            });
        }
        let flat: Vec<f64> = points.iter().flatten().copied().collect();
        Self::from_columns(DMatrix::from_vec(p, points.len(), flat))
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn ambient_dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let p = self.ambient_dim();
        &self.data.as_slice()[i * p..(i + 1) * p]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// `p x q` matrix with the selected points as columns.
    pub fn gather(&self, indices: &[usize]) -> DMatrix<f64> {
        let p = self.ambient_dim();
        let mut out = DMatrix::zeros(p, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            out.column_mut(c).copy_from_slice(self.point(i));
        }
        out
    }
}

/// A linear subspace stored through an orthonormal basis (`p x d`, columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wrap a basis whose columns are already orthonormal.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (p, d) = basis.shape();
        if d == 0 || d > p {
            return Err(Error::invalid(format!(
                "subspace dimension {d} must be in 1..={p}"
            )));
        }
        let gram = basis.transpose() * &basis;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::invalid("basis is not orthonormal"));
                }
            }
        }
        Ok(Self { basis })
    }

    /// Span of the given coordinate axes of `R^p`.
    pub fn coordinate(p: usize, axes: &[usize]) -> Result<Self> {
        let mut basis = DMatrix::zeros(p, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            if a >= p {
                return Err(Error::invalid(format!("axis {a} out of range for p={p}")));
            }
            basis[(a, c)] = 1.0;
        }
        Self::new(basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                actual: x.len(),
            });
        }
        let x = DVector::from_column_slice(x);
        let coeffs = self.basis.tr_mul(&x);
        Ok(&self.basis * coeffs)
    }
}

/// An ordered tuple of scene points, kept with the indices it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTuple {
    matrix: DMatrix<f64>,
    indices: Vec<usize>,
}

impl PointTuple {
    pub fn gather(cloud: &PointCloud, indices: &[usize]) -> Result<Self> {
        let q = indices.len();
        if q == 0 || q > cloud.ambient_dim() {
            return Err(Error::invalid(format!(
                "tuple size {q} must be in 1..={}",
                cloud.ambient_dim()
            )));
        }
        for (a, &i) in indices.iter().enumerate() {
            if i >= cloud.len() {
                return Err(Error::invalid(format!("index {i} out of range")));
            }
            if indices[..a].contains(&i) {
                return Err(Error::invalid(format!("duplicate index {i} in tuple")));
            }
        }
        Ok(Self {
            matrix: cloud.gather(indices),
            indices: indices.to_vec(),
        })
    }

    /// Tuple made of explicit vectors; indices are positions in `points`.
    pub fn from_vectors(points: &[Vec<f64>]) -> Result<Self> {
        let cloud = PointCloud::from_points(points)?;
        let indices: Vec<usize> = (0..cloud.len()).collect();
        Self::gather(&cloud, &indices)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

fn check_finite(matrix: &DMatrix<f64>) -> Result<()> {
    if matrix.is_empty() {
        return Err(Error::invalid("empty matrix"));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    Ok(())
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if !(rel_tol > 0.0 && rel_tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {rel_tol}")));
    }
    Ok(())
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular values, in no particular order.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    to_faer(m).singular_values().map_err(|_| Error::NoConvergence("SVD"))
}

/// Thin singular value decomposition `m = U diag(s) V^T`.
pub(crate) struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let svd = to_faer(m).thin_svd().map_err(|_| Error::NoConvergence("SVD"))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    Ok(ThinSvd {
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        s: (0..s.nrows()).map(|i| s[i]).collect(),
        v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    })
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NoConvergence("eigendecomposition"))?;
    let (s, u) = (eig.S().column_vector(), eig.U());
    Ok((
        (0..s.nrows()).map(|i| s[i]).collect(),
        DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
    ))
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank(matrix: &DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    check_finite(matrix)?;
    check_tol(rel_tol)?;
    let sv = singular_values(matrix)?;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * max).count())
}

pub fn is_linearly_dependent(tuple: &PointTuple, rel_tol: f64) -> Result<bool> {
    Ok(numerical_rank(tuple.matrix(), rel_tol)? < tuple.len())
}

/// Orthonormal basis of the column span of `points` (`p x q`), from the left
/// singular vectors of its numerically nonzero singular values.
pub fn orthonormal_basis(points: &DMatrix<f64>, rel_tol: f64) -> Result<Subspace> {
    check_finite(points)?;
    check_tol(rel_tol)?;
    let svd = thin_svd(points)?;
    let max = svd.s.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::DegenerateSpan);
    }
    let keep: Vec<usize> = svd
        .s
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel_tol * max)
        .map(|(i, _)| i)
        .collect();
    let basis = svd.u.select_columns(keep.iter());
    Ok(Subspace { basis })
}

/// Euclidean distance from `point` to its projection on `s`.
pub fn residual_distance(point: &[f64], s: &Subspace) -> Result<f64> {
    let proj = s.project(point)?;
    Ok(point
        .iter()
        .zip(proj.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Principal angles between two subspaces, ascending, `min(d1, d2)` of them.
///
/// Cosines come from the singular values of `B1^T B2`; sines from those of the
/// component of the smaller basis orthogonal to the larger subspace. Small
/// angles are taken from the sine, large ones from the cosine, so that angles
/// near zero keep full relative accuracy.
pub fn principal_angles(s1: &Subspace, s2: &Subspace) -> Result<Vec<f64>> {
    if s1.ambient_dim() != s2.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: s1.ambient_dim(),
            actual: s2.ambient_dim(),
        });
    }
    let (big, small) = if s1.dim() >= s2.dim() { (s1, s2) } else { (s2, s1) };
    let cross = big.basis.tr_mul(&small.basis);
    let mut cosines: Vec<f64> = singular_values(&cross)?
        .iter()
        .map(|c| c.clamp(0.0, 1.0))
        .collect();
    cosines.sort_by(|a, b| b.total_cmp(a));

    let orth = &small.basis - &big.basis * &cross;
    let mut sines: Vec<f64> = singular_values(&orth)?
        .iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect();
    sines.sort_by(|a, b| a.total_cmp(b));

    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(sines.iter())
        .map(|(&c, &s)| if c * c >= 0.5 { s.asin() } else { c.acos() })
        .collect();
    angles.sort_by(|a, b| a.total_cmp(b));
    Ok(angles)
}
