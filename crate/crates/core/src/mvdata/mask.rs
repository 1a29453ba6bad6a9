//! Mask construction for the missing-view and incomplete-view settings.
//!
//! Both operations are pure in (dataset, ratio, seed): repeated calls return
//! bit-identical datasets. Randomness comes from ChaCha8 seeded with the
//! given 64-bit seed, so masks reproduce across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{MultiViewDataset, MvDataError, ViewMatrix};

/// round-half-up sample count for a ratio (0.5 rounds to 1).
fn round_count(x: f64) -> usize {
    x.round() as usize
}

fn check_ratio(m: f64) -> Result<(), MvDataError> {
    if !(0.0..=1.0).contains(&m) || m.is_nan() {
        return Err(MvDataError::InvalidRatio(m));
    }
    Ok(())
}

fn check_no_emptied_sample(ds: &MultiViewDataset) -> Result<(), MvDataError> {
    for i in 0..ds.nsamples() {
        if !ds.sample_observed_somewhere(i) {
            return Err(MvDataError::MaskingEmptiedSample { sample: i });
        }
    }
    Ok(())
}

/// Discards one whole view from `round(m * n)` uniformly chosen samples.
///
/// For each selected sample one view is chosen uniformly and its mask column
/// is set to all-zero; data values are retained so later reconstruction error
/// can be scored against them. Requires at least two views when m > 0.
pub fn apply_missing_view_mask(
    ds: &MultiViewDataset,
    m: f64,
    seed: u64,
) -> Result<MultiViewDataset, MvDataError> {
    check_ratio(m)?;
    if m == 0.0 {
        return Ok(ds.clone());
    }
    if ds.nviews() < 2 {
        return Err(MvDataError::SingleViewDiscard);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masked = discard_views(ds, m, &mut rng)?;
    check_no_emptied_sample(&masked)?;
    Ok(masked)
}

fn discard_views(
    ds: &MultiViewDataset,
    m: f64,
    rng: &mut ChaCha8Rng,
) -> Result<MultiViewDataset, MvDataError> {
    use rand::Rng;
    let n = ds.nsamples();
    let count = round_count(m * n as f64);
    let mut masks: Vec<_> = ds.views().iter().map(|v| v.mask().clone()).collect();
    let selected = rand::seq::index::sample(rng, n, count);
    for sample in selected.iter() {
        let view = rng.random_range(0..ds.nviews());
        masks[view].column_mut(sample).fill(0.0);
    }
    rebuild(ds, masks)
}

/// Missing views plus randomly removed variables.
///
/// First performs the missing-view step at ratio `m`; then, per view,
/// removes `round(m * |observed entries in columns that survived the first
/// step|)` additional uniformly chosen observed entries from those columns.
pub fn apply_incomplete_mask(
    ds: &MultiViewDataset,
    m: f64,
    seed: u64,
) -> Result<MultiViewDataset, MvDataError> {
    check_ratio(m)?;
    if m == 0.0 {
        return Ok(ds.clone());
    }
    if ds.nviews() < 2 {
        return Err(MvDataError::SingleViewDiscard);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stage1 = discard_views(ds, m, &mut rng)?;

    let mut masks: Vec<_> = stage1.views().iter().map(|v| v.mask().clone()).collect();
    for (v, mask) in masks.iter_mut().enumerate() {
        // Entries still observed in columns the first stage did not discard.
        let mut positions: Vec<(usize, usize)> = Vec::new();
        for col in 0..mask.ncols() {
            if stage1.view(v).column_fully_missing(col) {
                continue;
            }
            for row in 0..mask.nrows() {
                if mask[(row, col)] == 1.0 {
                    positions.push((row, col));
                }
            }
        }
        let remove = round_count(m * positions.len() as f64);
        let chosen = rand::seq::index::sample(&mut rng, positions.len(), remove);
        for idx in chosen.iter() {
            let (row, col) = positions[idx];
            mask[(row, col)] = 0.0;
        }
    }
    let masked = rebuild(&stage1, masks)?;
    check_no_emptied_sample(&masked)?;
    Ok(masked)
}

fn rebuild(
    ds: &MultiViewDataset,
    masks: Vec<nalgebra::DMatrix<f64>>,
) -> Result<MultiViewDataset, MvDataError> {
    let views = ds
        .views()
        .iter()
        .zip(masks)
        .map(|(view, mask)| ViewMatrix::new(view.data().clone(), mask))
        .collect::<Result<Vec<_>, _>>()?;
    MultiViewDataset::new(views, ds.labels().map(|l| l.to_vec()))
}
