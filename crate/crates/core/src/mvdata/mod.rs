//! Multi-view dataset representation and missing-data tooling.
//!
//! A dataset is an ordered list of views; each view stores a feature-by-sample
//! matrix together with a binary existence mask of the same shape (1 =
//! observed). Columns are samples and are aligned across views. Masking
//! helpers construct the missing-view setting (whole columns discarded) and
//! the incomplete-view setting (columns discarded plus individual entries
//! removed), both deterministically from a seed.
//!
//! All types are immutable after construction; the operations here are pure
//! functions of their inputs and can be called concurrently.

mod io;
mod mask;
mod synth;

pub use io::{load_dataset, read_labels, read_matrix_csv, write_labels, write_view_csv};
pub use mask::{apply_incomplete_mask, apply_missing_view_mask};
pub use synth::{synth_union_of_subspaces, SynthSpec};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MvDataError {
    #[error("view {view}: data is {data_rows}x{data_cols} but mask is {mask_rows}x{mask_cols}")]
    ShapeMismatch {
        view: usize,
        data_rows: usize,
        data_cols: usize,
        mask_rows: usize,
        mask_cols: usize,
    },
    #[error("view {view}: mask entry ({row},{col}) is {value}, expected 0 or 1")]
    NonBinaryMask {
        view: usize,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("view {view}: observed entry ({row},{col}) is not finite")]
    NonFiniteEntry { view: usize, row: usize, col: usize },
    #[error("views disagree on sample count: view 0 has {expected} columns, view {view} has {found}")]
    ColumnCountMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset must contain at least one view")]
    NoViews,
    #[error("label vector has length {found}, expected {expected}")]
    LabelLength { expected: usize, found: usize },
    #[error("label {value} at position {index} is not a positive integer")]
    InvalidLabel { index: usize, value: i64 },
    #[error("sample {sample} is absent from every view")]
    SampleFullyMissing { sample: usize },
    #[error("masking ratio {0} is outside [0, 1]")]
    InvalidRatio(f64),
    #[error("cannot discard views with V = 1 and m > 0")]
    SingleViewDiscard,
    #[error("masking left sample {sample} with no observed entries in any view")]
    MaskingEmptiedSample { sample: usize },
    #[error("{0}")]
    InvalidSynthSpec(String),
    #[error("{path}: row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        path: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}: cell ({row},{col}) is not numeric: {text:?}")]
    NonNumericCell {
        path: String,
        row: usize,
        col: usize,
        text: String,
    },
    #[error("{path}: file contains no data")]
    EmptyFile { path: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
}

/// One view's data matrix together with its existence mask.
///
/// `data` and `mask` are both `d_v x n` (feature-by-sample). Mask entries are
/// exactly 0.0 or 1.0; every data entry at a mask-1 position is finite. Data
/// at mask-0 positions is retained (it may hold ground truth for
/// reconstruction scoring) but consumers must not treat it as observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrix {
    data: DMatrix<f64>,
    mask: DMatrix<f64>,
}

impl ViewMatrix {
    pub fn new(data: DMatrix<f64>, mask: DMatrix<f64>) -> Result<Self, MvDataError> {
        Self::validated(data, mask, 0)
    }

    fn validated(
        data: DMatrix<f64>,
        mask: DMatrix<f64>,
        view: usize,
    ) -> Result<Self, MvDataError> {
        if data.shape() != mask.shape() {
            return Err(MvDataError::ShapeMismatch {
                view,
                data_rows: data.nrows(),
                data_cols: data.ncols(),
                mask_rows: mask.nrows(),
                mask_cols: mask.ncols(),
            });
        }
        for col in 0..mask.ncols() {
            for row in 0..mask.nrows() {
                let m = mask[(row, col)];
                if m != 0.0 && m != 1.0 {
                    return Err(MvDataError::NonBinaryMask {
                        view,
                        row,
                        col,
                        value: m,
                    });
                }
                if m == 1.0 && !data[(row, col)].is_finite() {
                    return Err(MvDataError::NonFiniteEntry { view, row, col });
                }
            }
        }
        Ok(Self { data, mask })
    }

    /// View with an all-ones mask.
    pub fn fully_observed(data: DMatrix<f64>) -> Result<Self, MvDataError> {
        let mask = DMatrix::from_element(data.nrows(), data.ncols(), 1.0);
        Self::new(data, mask)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn mask(&self) -> &DMatrix<f64> {
        &self.mask
    }

    /// Feature dimension d_v.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn nsamples(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.mask[(row, col)] == 1.0
    }

    /// True when every entry of column `col` is observed.
    pub fn column_fully_observed(&self, col: usize) -> bool {
        self.mask.column(col).iter().all(|&m| m == 1.0)
    }

    /// True when no entry of column `col` is observed.
    pub fn column_fully_missing(&self, col: usize) -> bool {
        self.mask.column(col).iter().all(|&m| m == 0.0)
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1.0).count()
    }
}

/// Aligned collection of views over the same `n` samples, with optional
/// ground-truth labels (1-based cluster ids).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<ViewMatrix>,
    labels: Option<Vec<usize>>,
    n: usize,
}

impl MultiViewDataset {
    pub fn new(views: Vec<ViewMatrix>, labels: Option<Vec<usize>>) -> Result<Self, MvDataError> {
        if views.is_empty() {
            return Err(MvDataError::NoViews);
        }
        let n = views[0].nsamples();
        for (v, view) in views.iter().enumerate() {
            if view.nsamples() != n {
                return Err(MvDataError::ColumnCountMismatch {
                    view: v,
                    expected: n,
                    found: view.nsamples(),
                });
            }
        }
        if let Some(ref labels) = labels {
            if labels.len() != n {
                return Err(MvDataError::LabelLength {
                    expected: n,
                    found: labels.len(),
                });
            }
            for (i, &l) in labels.iter().enumerate() {
                if l == 0 {
                    return Err(MvDataError::InvalidLabel {
                        index: i,
                        value: l as i64,
                    });
                }
            }
        }
        Ok(Self { views, labels, n })
    }

    pub fn views(&self) -> &[ViewMatrix] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &ViewMatrix {
        &self.views[v]
    }

    pub fn nviews(&self) -> usize {
        self.views.len()
    }

    pub fn nsamples(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Replace labels, keeping views untouched.
    pub fn with_labels(self, labels: Option<Vec<usize>>) -> Result<Self, MvDataError> {
        Self::new(self.views, labels)
    }

    /// True when some view observes at least one entry of sample `i`.
    pub fn sample_observed_somewhere(&self, i: usize) -> bool {
        self.views
            .iter()
            .any(|view| !view.column_fully_missing(i))
    }
}

/// Per-view index sets of samples whose entire column is observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaSets {
    sets: Vec<Vec<usize>>,
    n: usize,
}

impl OmegaSets {
    /// Indices of fully observed samples on view `v`, ascending.
    pub fn set(&self, v: usize) -> &[usize] {
        &self.sets[v]
    }

    pub fn nviews(&self) -> usize {
        self.sets.len()
    }

    /// Number of available samples on view `v`.
    pub fn count(&self, v: usize) -> usize {
        self.sets[v].len()
    }

    pub fn contains(&self, v: usize, sample: usize) -> bool {
        self.sets[v].binary_search(&sample).is_ok()
    }

    /// Views on which sample `i` is available.
    pub fn views_with_sample(&self, i: usize) -> Vec<usize> {
        (0..self.sets.len())
            .filter(|&v| self.contains(v, i))
            .collect()
    }

    pub fn nsamples(&self) -> usize {
        self.n
    }
}

/// Computes the per-view sets of fully observed samples.
///
/// Errors if some sample has no fully observed column in any view.
pub fn omega_sets(ds: &MultiViewDataset) -> Result<OmegaSets, MvDataError> {
    let n = ds.nsamples();
    let sets: Vec<Vec<usize>> = ds
        .views()
        .iter()
        .map(|view| (0..n).filter(|&i| view.column_fully_observed(i)).collect())
        .collect();
    for i in 0..n {
        let covered = sets.iter().any(|s| s.binary_search(&i).is_ok());
        if !covered {
            return Err(MvDataError::SampleFullyMissing { sample: i });
        }
    }
    Ok(OmegaSets { sets, n })
}
