//! Plain-text scene files.
//!
//! A matrix file starts with a line `rows cols`, followed by one line per row
//! of space-separated reals printed with 17 significant digits. A scene
//! directory holds `points.txt` (one point per row), `labels.txt` (one label
//! per line, `0` for outliers) and `basis_<k>.txt` for each subspace, whose
//! rows are the orthonormal basis vectors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use subspace_ransac::{LabelVector, PointCloud, Scene, Subspace};

use crate::error::{BenchError, Result};

pub const POINTS_FILE: &str = "points.txt";
pub const LABELS_FILE: &str = "labels.txt";

pub fn basis_file(k: usize) -> String {
    format!("basis_{k}.txt")
}

/// Rows of `m` as lines.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let fail = |message: String| BenchError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| fail("empty file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| fail(format!("bad header {header:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(fail(format!("header must be `rows cols`, got {header:?}")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for (r, line) in lines.enumerate() {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| fail(format!("line {}: bad number {tok:?}", r + 2)))?,
            );
        }
        if data.len() - before != cols {
            return Err(fail(format!("line {}: expected {cols} values", r + 2)));
        }
    }
    if data.len() != rows * cols {
        return Err(fail(format!("expected {rows} rows, found {}", data.len() / cols.max(1))));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| BenchError::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| BenchError::io(path, e))
}

pub fn write_scene(dir: &Path, scene: &Scene) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    write(dir.join(POINTS_FILE), &format_matrix(&scene.points.matrix().transpose()))?;
    let mut labels = String::new();
    for l in scene.labels.as_slice() {
        writeln!(labels, "{l}").expect("writing to a String");
    }
    write(dir.join(LABELS_FILE), &labels)?;
    for (k, s) in scene.subspaces.iter().enumerate() {
        write(dir.join(basis_file(k + 1)), &format_matrix(&s.basis().transpose()))?;
    }
    Ok(())
}

pub fn read_points(path: &Path) -> Result<PointCloud> {
    let rows = parse_matrix(&read(path)?, path)?;
    PointCloud::from_rows(&rows).map_err(|e| BenchError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn read_labels(path: &Path) -> Result<LabelVector> {
    let text = read(path)?;
    let labels = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim().parse::<u32>().map_err(|_| BenchError::Format {
                path: path.to_path_buf(),
                message: format!("line {}: bad label {l:?}", i + 1),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelVector::new(labels))
}

pub fn read_basis(path: &Path) -> Result<Subspace> {
    let rows = parse_matrix(&read(path)?, path)?;
    Subspace::new(rows.transpose()).map_err(|e| BenchError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Ground truth stored next to a point file, when present.
#[derive(Debug, Clone, Default)]
pub struct Truth {
    pub labels: Option<LabelVector>,
    pub subspaces: Vec<Subspace>,
}

pub fn read_truth(dir: &Path) -> Result<Truth> {
    let labels_path = dir.join(LABELS_FILE);
    let labels = if labels_path.exists() {
        Some(read_labels(&labels_path)?)
    } else {
        None
    };
    let mut subspaces = Vec::new();
    for k in 1.. {
        let path = dir.join(basis_file(k));
        if !path.exists() {
            break;
        }
        subspaces.push(read_basis(&path)?);
    }
    Ok(Truth { labels, subspaces })
}
