//! CSV ingestion and export.
//!
//! Matrix files are plain comma-separated numeric grids, one row per feature,
//! no header. The literal `NaN` marks an unobserved entry; loading turns it
//! into a mask-0 position (with the stored value set to 0 so downstream
//! arithmetic never sees a NaN). Label files carry one 1-based integer per
//! line.

use std::path::Path;

use nalgebra::DMatrix;

use super::{MultiViewDataset, MvDataError, ViewMatrix};

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Reads a matrix CSV, returning the data matrix and the mask implied by
/// NaN cells. NaN cells are stored as 0.0 with mask 0.
pub fn read_matrix_csv(path: &Path) -> Result<(DMatrix<f64>, DMatrix<f64>), MvDataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| MvDataError::Io {
            path: path_str(path),
            source: std::io::Error::other(e.to_string()),
        })?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut mask_rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;

    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| MvDataError::Csv {
            path: path_str(path),
            message: e.to_string(),
        })?;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(MvDataError::RaggedRow {
                path: path_str(path),
                row: r,
                expected,
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(record.len());
        let mut mask_row = Vec::with_capacity(record.len());
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| MvDataError::NonNumericCell {
                path: path_str(path),
                row: r,
                col: c,
                text: cell.to_string(),
            })?;
            if value.is_nan() {
                row.push(0.0);
                mask_row.push(0.0);
            } else {
                row.push(value);
                mask_row.push(1.0);
            }
        }
        rows.push(row);
        mask_rows.push(mask_row);
    }

    let nrows = rows.len();
    let ncols = width.unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(MvDataError::EmptyFile {
            path: path_str(path),
        });
    }
    let data = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    let mask = DMatrix::from_fn(nrows, ncols, |i, j| mask_rows[i][j]);
    Ok((data, mask))
}

/// Reads a label file: one 1-based integer per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>, MvDataError> {
    let text = std::fs::read_to_string(path).map_err(|e| MvDataError::Io {
        path: path_str(path),
        source: e,
    })?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: i64 = line.parse().map_err(|_| MvDataError::NonNumericCell {
            path: path_str(path),
            row: i,
            col: 0,
            text: line.to_string(),
        })?;
        if value < 1 {
            return Err(MvDataError::InvalidLabel { index: i, value });
        }
        labels.push(value as usize);
    }
    if labels.is_empty() {
        return Err(MvDataError::EmptyFile {
            path: path_str(path),
        });
    }
    Ok(labels)
}

/// Loads one CSV per view plus an optional label file.
///
/// Column counts must agree across views; NaN cells become mask-0 positions.
pub fn load_dataset(
    view_paths: &[impl AsRef<Path>],
    label_path: Option<&Path>,
) -> Result<MultiViewDataset, MvDataError> {
    if view_paths.is_empty() {
        return Err(MvDataError::NoViews);
    }
    let mut views = Vec::with_capacity(view_paths.len());
    for path in view_paths {
        let (data, mask) = read_matrix_csv(path.as_ref())?;
        views.push(ViewMatrix::new(data, mask)?);
    }
    let labels = label_path.map(read_labels).transpose()?;
    MultiViewDataset::new(views, labels)
}

/// Writes a view as a matrix CSV, emitting `NaN` at mask-0 positions.
///
/// Observed values use Rust's shortest round-trip float formatting, so
/// save/load round-trips are exact.
pub fn write_view_csv(path: &Path, view: &ViewMatrix) -> Result<(), MvDataError> {
    let mut out = String::new();
    for i in 0..view.dim() {
        for j in 0..view.nsamples() {
            if j > 0 {
                out.push(',');
            }
            if view.is_observed(i, j) {
                out.push_str(&format!("{}", view.data()[(i, j)]));
            } else {
                out.push_str("NaN");
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| MvDataError::Io {
        path: path_str(path),
        source: e,
    })
}

/// Writes labels, one per line.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), MvDataError> {
    let mut out = String::new();
    for l in labels {
        out.push_str(&format!("{l}\n"));
    }
    std::fs::write(path, out).map_err(|e| MvDataError::Io {
        path: path_str(path),
        source: e,
    })
}
