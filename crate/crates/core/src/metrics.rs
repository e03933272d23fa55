//! Evaluation metrics: largest principal angle and the Rand index.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::{principal_angles, Subspace};

/// Label reserved for points that belong to no subspace.
pub const OUTLIER: u32 = 0;

/// Per-point cluster labels; `0` marks an outlier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LabelVector(Vec<u32>);

impl LabelVector {
    pub fn new(labels: Vec<u32>) -> Self {
        Self(labels)
    }

    pub fn outliers(n: usize) -> Self {
        Self(vec![OUTLIER; n])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [u32] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u32>> for LabelVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// Largest principal angle between the estimate and the truth, in `[0, pi/2]`.
///
/// Subspaces of different dimension are never equal and get `pi/2`.
pub fn recovery_angle(estimated: &Subspace, truth: &Subspace) -> Result<f64> {
    let angles = principal_angles(estimated, truth)?;
    if estimated.dim() != truth.dim() {
        return Ok(FRAC_PI_2);
    }
    Ok(angles.last().copied().unwrap_or(0.0))
}

fn pairs(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

/// Fraction of point pairs on which two labelings agree (same cluster in both
/// or different clusters in both). Outliers form one more class.
pub fn rand_index(a: &LabelVector, b: &LabelVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len() as u64;
    if n < 2 {
        return Err(Error::invalid("rand index needs at least two points"));
    }
    let mut joint: HashMap<(u32, u32), u64> = HashMap::new();
    let mut rows: HashMap<u32, u64> = HashMap::new();
    let mut cols: HashMap<u32, u64> = HashMap::new();
    for (&x, &y) in a.0.iter().zip(&b.0) {
        *joint.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let same_both: u64 = joint.values().map(|&c| pairs(c)).sum();
    let same_a: u64 = rows.values().map(|&c| pairs(c)).sum();
    let same_b: u64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    // agreements = together in both + apart in both
    let agree = total + 2 * same_both - same_a - same_b;
    Ok(agree as f64 / total as f64)
}
