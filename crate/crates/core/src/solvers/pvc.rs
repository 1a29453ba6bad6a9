//! Multi-view nonnegative factorization for the missing-view setting.
//!
//! Minimizes, over nonnegative `U^(v)` and `W`,
//!
//! ```text
//! sum_v sum_{i in Omega^(v)} ||x_i^(v) - U^(v) w_i||^2 + alpha ||W||_{1,1}
//! ```
//!
//! by exact block coordinate descent: transform columns are updated one at a
//! time with a clamped closed-form minimizer, and each embedding column is
//! updated coordinate-wise using only the views where that sample survives.
//! Because every block update is an exact constrained minimizer, the
//! objective never increases and all factors stay nonnegative exactly.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SolverError;
use crate::jella::{
    alternate_missing_view, IterationTrace, MissingViewProblem, StopRule,
};
use crate::mvdata::{MultiViewDataset, OmegaSets};

/// Denominators below this are treated as zero curvature.
const CURVATURE_FLOOR: f64 = 1e-12;

/// Fitted nonnegative factors.
#[derive(Debug, Clone)]
pub struct PvcModel {
    pub u: Vec<DMatrix<f64>>,
    pub w: DMatrix<f64>,
}

/// Objective of the penalized factorization over surviving columns.
pub fn pvc_objective(
    ds: &MultiViewDataset,
    omega: &OmegaSets,
    u: &[DMatrix<f64>],
    w: &DMatrix<f64>,
    alpha: f64,
) -> f64 {
    let mut total = 0.0;
    for (v, view) in ds.views().iter().enumerate() {
        for &i in omega.set(v) {
            let r = view.data().column(i) - &u[v] * w.column(i);
            total += r.norm_squared();
        }
    }
    total + alpha * w.iter().map(|x| x.abs()).sum::<f64>()
}

struct PvcProblem<'a> {
    ds: &'a MultiViewDataset,
    omega: &'a OmegaSets,
    alpha: f64,
}

struct State {
    u: Vec<DMatrix<f64>>,
    w: DMatrix<f64>,
}

impl MissingViewProblem for PvcProblem<'_> {
    type State = State;

    fn objective(&self, s: &State) -> f64 {
        pvc_objective(self.ds, self.omega, &s.u, &s.w, self.alpha)
    }

    fn update_u(&self, s: &mut State) {
        for (v, view) in self.ds.views().iter().enumerate() {
            let cols = self.omega.set(v);
            if cols.is_empty() {
                continue;
            }
            let x = view.data().select_columns(cols.iter());
            let w = s.w.select_columns(cols.iter());
            let gram = &w * w.transpose(); // r x r
            let numer = x * w.transpose(); // d x r
            let u = &mut s.u[v];
            // Column-wise exact minimization with the nonnegativity clamp:
            // the quadratic in one column is separable, so clamping the
            // unconstrained step is the constrained minimizer.
            for j in 0..u.ncols() {
                let denom = gram[(j, j)];
                if denom <= CURVATURE_FLOOR {
                    continue;
                }
                let ug_col = &*u * gram.column(j);
                for i in 0..u.nrows() {
                    let step = (ug_col[i] - numer[(i, j)]) / denom;
                    u[(i, j)] = (u[(i, j)] - step).max(0.0);
                }
            }
        }
    }

    fn update_embeddings(&self, s: &mut State) {
        let r = s.w.nrows();
        let grams: Vec<DMatrix<f64>> = s.u.iter().map(|u| u.transpose() * u).collect();
        let projections: Vec<DMatrix<f64>> = s
            .u
            .iter()
            .zip(self.ds.views())
            .map(|(u, view)| u.transpose() * view.data())
            .collect();
        for i in 0..self.ds.nsamples() {
            let views = self.omega.views_with_sample(i);
            let mut gram = DMatrix::zeros(r, r);
            let mut target = DVector::zeros(r);
            for &v in &views {
                gram += &grams[v];
                target += projections[v].column(i);
            }
            let mut wi = s.w.column(i).clone_owned();
            let mut gw = &gram * &wi;
            // Coordinate-wise exact minimization of the per-sample objective
            // sum_v ||x_i - U w_i||^2 + alpha * sum_j w_ij over w_i >= 0.
            for j in 0..r {
                let denom = gram[(j, j)];
                if denom <= CURVATURE_FLOOR {
                    if self.alpha > 0.0 {
                        let delta = -wi[j];
                        if delta != 0.0 {
                            gw += gram.column(j) * delta;
                            wi[j] = 0.0;
                        }
                    }
                    continue;
                }
                let slope = target[j] - gw[j]; // negative half-gradient of the fit term
                let updated = (wi[j] + (slope - self.alpha / 2.0) / denom).max(0.0);
                let delta = updated - wi[j];
                if delta != 0.0 {
                    gw += gram.column(j) * delta;
                    wi[j] = updated;
                }
            }
            s.w.set_column(i, &wi);
        }
    }
}

fn validate_nonnegative(ds: &MultiViewDataset) -> Result<(), SolverError> {
    for (v, view) in ds.views().iter().enumerate() {
        for j in 0..view.nsamples() {
            for i in 0..view.dim() {
                if view.is_observed(i, j) && view.data()[(i, j)] < 0.0 {
                    return Err(SolverError::NegativeObservedData {
                        view: v,
                        row: i,
                        col: j,
                        value: view.data()[(i, j)],
                    });
                }
            }
        }
    }
    Ok(())
}

/// Fits the penalized nonnegative factorization.
///
/// Factors are initialized uniformly at random (seeded), scaled to the data
/// magnitude. Observed data must be nonnegative; the returned factors are
/// nonnegative exactly.
pub fn pvc_fit(
    ds: &MultiViewDataset,
    omega: &OmegaSets,
    alpha: f64,
    rank: usize,
    stop: &StopRule,
    seed: u64,
) -> Result<(PvcModel, IterationTrace), SolverError> {
    validate_nonnegative(ds)?;
    if alpha < 0.0 {
        return Err(SolverError::InvalidConfig(format!(
            "alpha = {alpha} must be >= 0"
        )));
    }
    let min_dim = ds
        .views()
        .iter()
        .map(|v| v.dim())
        .min()
        .unwrap_or(0)
        .min(ds.nsamples());
    if rank == 0 || rank > min_dim {
        return Err(SolverError::InvalidConfig(format!(
            "rank {rank} must be in [1, {min_dim}]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed_sum = 0.0;
    let mut observed_count = 0usize;
    for view in ds.views() {
        for j in 0..view.nsamples() {
            for i in 0..view.dim() {
                if view.is_observed(i, j) {
                    observed_sum += view.data()[(i, j)];
                    observed_count += 1;
                }
            }
        }
    }
    let mean = if observed_count > 0 {
        observed_sum / observed_count as f64
    } else {
        0.0
    };
    let scale = (mean / rank as f64).max(1e-12).sqrt();
    let u: Vec<DMatrix<f64>> = ds
        .views()
        .iter()
        .map(|view| DMatrix::from_fn(view.dim(), rank, |_, _| scale * rng.random_range(0.0..1.0)))
        .collect();
    let w = DMatrix::from_fn(rank, ds.nsamples(), |_, _| {
        scale * rng.random_range(0.0..1.0)
    });

    let problem = PvcProblem { ds, omega, alpha };
    let (state, trace) = alternate_missing_view(&problem, omega, State { u, w }, stop)?;
    Ok((
        PvcModel {
            u: state.u,
            w: state.w,
        },
        trace,
    ))
}
