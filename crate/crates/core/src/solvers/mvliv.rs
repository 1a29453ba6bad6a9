//! Unregularized low-rank completion through a shared embedding.
//!
//! The squared-loss special case of the framework: per-view surrogates
//! `Z^(v)` factored as `U^(v) W` with no constraints or regularizers, the
//! surrogates pinned to the data on observed entries. Every sub-step is an
//! exact minimizer, so the loop is driven by the generic incomplete-setting
//! skeleton with its monotonicity contract.

use nalgebra::DMatrix;

use super::SolverError;
use crate::jella::{
    alternate_incomplete, init_embedding, mean_filled_views, AlternatingProblem, IterationTrace,
    JellaProblem, StopRule,
};
use crate::mvdata::MultiViewDataset;
use crate::numerics::pinv;

/// Fitted factors: completed surrogates, per-view transforms and the shared
/// embedding.
#[derive(Debug, Clone)]
pub struct MvlivModel {
    pub z: Vec<DMatrix<f64>>,
    pub u: Vec<DMatrix<f64>>,
    pub w: DMatrix<f64>,
}

struct MvlivProblem<'a> {
    ds: &'a MultiViewDataset,
}

struct State {
    z: Vec<DMatrix<f64>>,
    u: Vec<DMatrix<f64>>,
    w: DMatrix<f64>,
}

impl AlternatingProblem for MvlivProblem<'_> {
    type State = State;

    fn objective(&self, s: &State) -> f64 {
        s.z.iter()
            .zip(&s.u)
            .map(|(z, u)| (z - u * &s.w).norm_squared())
            .sum()
    }

    fn update_u(&self, s: &mut State) {
        let gram_inv = pinv(&(&s.w * s.w.transpose()));
        for (u, z) in s.u.iter_mut().zip(&s.z) {
            *u = z * s.w.transpose() * &gram_inv;
        }
    }

    fn update_w(&self, s: &mut State) {
        let r = s.w.nrows();
        let mut gram = DMatrix::zeros(r, r);
        let mut rhs = DMatrix::zeros(r, s.w.ncols());
        for (u, z) in s.u.iter().zip(&s.z) {
            gram += u.transpose() * u;
            rhs += u.transpose() * z;
        }
        s.w = pinv(&gram) * rhs;
    }

    fn update_z(&self, s: &mut State) {
        for (v, z) in s.z.iter_mut().enumerate() {
            let view = self.ds.view(v);
            let approx = &s.u[v] * &s.w;
            for j in 0..z.ncols() {
                for i in 0..z.nrows() {
                    z[(i, j)] = if view.is_observed(i, j) {
                        view.data()[(i, j)]
                    } else {
                        approx[(i, j)]
                    };
                }
            }
        }
    }

    fn constraints_satisfied(&self, s: &State) -> bool {
        s.z.iter().enumerate().all(|(v, z)| {
            let view = self.ds.view(v);
            (0..z.ncols()).all(|j| {
                (0..z.nrows()).all(|i| !view.is_observed(i, j) || z[(i, j)] == view.data()[(i, j)])
            })
        })
    }
}

/// Fits the unregularized model: mean-filled surrogates, SVD-initialized
/// embedding, alternating exact updates until the stop rule fires.
pub fn mvliv_fit(
    ds: &MultiViewDataset,
    rank: usize,
    stop: &StopRule,
) -> Result<(MvlivModel, IterationTrace), SolverError> {
    JellaProblem::unregularized(rank).validate(ds)?;
    let z = mean_filled_views(ds);
    let w = init_embedding(&z, rank);
    let gram_inv = pinv(&(&w * w.transpose()));
    let u: Vec<_> = z.iter().map(|zv| zv * w.transpose() * &gram_inv).collect();
    let problem = MvlivProblem { ds };
    let (state, trace) = alternate_incomplete(&problem, State { z, u, w }, stop)?;
    Ok((
        MvlivModel {
            z: state.z,
            u: state.u,
            w: state.w,
        },
        trace,
    ))
}
