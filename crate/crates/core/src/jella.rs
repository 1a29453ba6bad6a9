//! Alternating-minimization skeletons shared by the solvers.
//!
//! Two driver loops are provided. [`alternate_incomplete`] runs the
//! U-step / W-step / Z-step cycle for problems that carry low-rank
//! surrogate matrices constrained to agree with the data on observed
//! entries. [`alternate_missing_view`] runs the variant where whole columns
//! are missing per view: a per-view U-step over surviving columns followed
//! by per-sample embedding updates that only see the views where the sample
//! exists.
//!
//! Both drivers enforce the framework contract at runtime: each sub-solver
//! must be an exact minimizer of its subproblem, so the objective sequence
//! cannot increase (beyond a small relative slack). A violation aborts with
//! [`FrameworkError::ObjectiveIncreased`] rather than silently diverging.

use std::time::Instant;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::mvdata::{MultiViewDataset, OmegaSets};

/// Relative slack allowed on the non-increasing objective contract.
pub const MONOTONICITY_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FrameworkError {
    #[error("objective increased at iteration {iteration}: {previous} -> {current}")]
    ObjectiveIncreased {
        iteration: usize,
        previous: f64,
        current: f64,
    },
    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error("equality constraint violated after iteration {iteration}")]
    ConstraintViolated { iteration: usize },
    #[error("sample {sample} is absent from every view")]
    SampleUncovered { sample: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

/// Loss applied per view between the surrogate and its factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    SquaredFrobenius,
}

/// Constraint set attached to a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSet {
    Unconstrained,
    Nonnegative,
}

/// Descriptor of one joint embedding / low-rank approximation instance:
/// which loss couples each view to the shared embedding, optional factor
/// regularizers with their weights, factor constraints, and the embedding
/// rank.
#[derive(Debug, Clone)]
pub struct JellaProblem {
    pub rank: usize,
    pub loss: Loss,
    pub u_constraint: ConstraintSet,
    pub w_constraint: ConstraintSet,
    /// Weight of the transformation-matrix regularizer (0 disables it).
    pub u_reg_weight: f64,
    /// Weight of the embedding regularizer (0 disables it).
    pub w_reg_weight: f64,
}

impl JellaProblem {
    /// Plain squared-loss factorization with no constraints or regularizers.
    pub fn unregularized(rank: usize) -> Self {
        Self {
            rank,
            loss: Loss::SquaredFrobenius,
            u_constraint: ConstraintSet::Unconstrained,
            w_constraint: ConstraintSet::Unconstrained,
            u_reg_weight: 0.0,
            w_reg_weight: 0.0,
        }
    }

    /// Checks the rank against the dataset and the weights for sign.
    pub fn validate(&self, ds: &MultiViewDataset) -> Result<(), FrameworkError> {
        let min_dim = ds
            .views()
            .iter()
            .map(|v| v.dim())
            .min()
            .unwrap_or(0)
            .min(ds.nsamples());
        if self.rank == 0 || self.rank > min_dim {
            return Err(FrameworkError::InvalidProblem(format!(
                "rank {} must be in [1, {}] for this dataset",
                self.rank, min_dim
            )));
        }
        if self.u_reg_weight < 0.0 || self.w_reg_weight < 0.0 {
            return Err(FrameworkError::InvalidProblem(
                "regularizer weights must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Why a fit loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIter,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::Converged => write!(f, "converged"),
            StopReason::MaxIter => write!(f, "max_iter"),
        }
    }
}

/// Relative-change stopping rule.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    tol: f64,
    max_iter: usize,
}

/// Stops when `|g_t - g_{t+1}| / max(1, |g_t|) < tol` or after `max_iter`
/// iterations.
pub fn stop_rule_relative(tol: f64, max_iter: usize) -> StopRule {
    assert!(tol > 0.0, "stop tolerance must be positive");
    StopRule { tol, max_iter }
}

impl StopRule {
    /// Evaluates the rule on the objective history (initial value first,
    /// then one entry per completed iteration). Convergence is checked
    /// before the iteration budget.
    pub fn evaluate(&self, objectives: &[f64]) -> Option<StopReason> {
        if objectives.len() >= 2 {
            let prev = objectives[objectives.len() - 2];
            let last = objectives[objectives.len() - 1];
            if (prev - last).abs() / prev.abs().max(1.0) < self.tol {
                return Some(StopReason::Converged);
            }
        }
        if objectives.len().saturating_sub(1) >= self.max_iter {
            return Some(StopReason::MaxIter);
        }
        None
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }
}

/// One accepted iteration in a trace.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TraceEntry {
    pub objective: f64,
    /// Wall time of the iteration, seconds.
    pub seconds: f64,
    /// Relaxation factor used, for solvers that have one.
    pub lambda: Option<f64>,
}

/// Objective/timing record of a fit.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub entries: Vec<TraceEntry>,
    pub stop_reason: StopReason,
    /// Objective value at initialization, before the first iteration.
    pub initial_objective: f64,
    pub total_seconds: f64,
}

impl IterationTrace {
    /// Objective history: initial value followed by per-iteration values.
    pub fn objectives(&self) -> Vec<f64> {
        let mut all = Vec::with_capacity(self.entries.len() + 1);
        all.push(self.initial_objective);
        all.extend(self.entries.iter().map(|e| e.objective));
        all
    }

    pub fn iterations(&self) -> usize {
        self.entries.len()
    }

    /// True when the recorded objectives never increase beyond the relative
    /// slack.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let all = self.objectives();
        all.windows(2)
            .all(|w| w[1] <= w[0] + slack * w[0].abs().max(1.0))
    }
}

/// A problem driven by the incomplete-setting loop: exact sub-minimizers for
/// the per-view transforms, the shared embedding, and the constrained
/// surrogates.
pub trait AlternatingProblem {
    type State;

    fn objective(&self, state: &Self::State) -> f64;
    fn update_u(&self, state: &mut Self::State);
    fn update_w(&self, state: &mut Self::State);
    fn update_z(&self, state: &mut Self::State);
    /// Exactness check for the surrogate equality constraint; called after
    /// every iteration.
    fn constraints_satisfied(&self, state: &Self::State) -> bool;
}

/// Runs the U-step / W-step / Z-step cycle until the stop rule fires.
///
/// The objective sequence is verified non-increasing (within
/// [`MONOTONICITY_SLACK`] relative) and the constraint check must pass after
/// every iteration.
pub fn alternate_incomplete<P: AlternatingProblem>(
    problem: &P,
    init: P::State,
    stop: &StopRule,
) -> Result<(P::State, IterationTrace), FrameworkError> {
    run_loop(init, stop, |state| {
        problem.update_u(state);
        problem.update_w(state);
        problem.update_z(state);
    }, |state| problem.objective(state), |state| problem.constraints_satisfied(state))
}

/// A problem driven by the missing-view loop: per-view updates over the
/// surviving columns, then per-sample embedding updates that use only the
/// views where each sample exists.
pub trait MissingViewProblem {
    type State;

    fn objective(&self, state: &Self::State) -> f64;
    /// Per-view transform update over the columns in that view's index set.
    fn update_u(&self, state: &mut Self::State);
    /// Per-sample embedding updates; sample `i` may only use views whose
    /// index set contains `i`.
    fn update_embeddings(&self, state: &mut Self::State);
}

/// Missing-view alternating loop. Validates that every sample survives on
/// at least one view before starting.
pub fn alternate_missing_view<P: MissingViewProblem>(
    problem: &P,
    omega: &OmegaSets,
    init: P::State,
    stop: &StopRule,
) -> Result<(P::State, IterationTrace), FrameworkError> {
    for i in 0..omega.nsamples() {
        if (0..omega.nviews()).all(|v| !omega.contains(v, i)) {
            return Err(FrameworkError::SampleUncovered { sample: i });
        }
    }
    run_loop(init, stop, |state| {
        problem.update_u(state);
        problem.update_embeddings(state);
    }, |state| problem.objective(state), |_| true)
}

fn run_loop<S>(
    init: S,
    stop: &StopRule,
    mut step: impl FnMut(&mut S),
    objective: impl Fn(&S) -> f64,
    constraints_ok: impl Fn(&S) -> bool,
) -> Result<(S, IterationTrace), FrameworkError> {
    let started = Instant::now();
    let mut state = init;
    let g0 = objective(&state);
    if !g0.is_finite() {
        return Err(FrameworkError::NonFiniteObjective { iteration: 0 });
    }
    let mut objectives = vec![g0];
    let mut entries = Vec::new();

    let stop_reason = loop {
        if let Some(reason) = stop.evaluate(&objectives) {
            break reason;
        }
        let iter_started = Instant::now();
        step(&mut state);
        let iteration = entries.len() + 1;
        let previous = *objectives.last().unwrap();
        let current = objective(&state);
        if !current.is_finite() {
            return Err(FrameworkError::NonFiniteObjective { iteration });
        }
        if current > previous + MONOTONICITY_SLACK * previous.abs().max(1.0) {
            return Err(FrameworkError::ObjectiveIncreased {
                iteration,
                previous,
                current,
            });
        }
        if !constraints_ok(&state) {
            return Err(FrameworkError::ConstraintViolated { iteration });
        }
        objectives.push(current);
        entries.push(TraceEntry {
            objective: current,
            seconds: iter_started.elapsed().as_secs_f64(),
            lambda: None,
        });
    };

    Ok((
        state,
        IterationTrace {
            entries,
            stop_reason,
            initial_objective: g0,
            total_seconds: started.elapsed().as_secs_f64(),
        },
    ))
}

/// Fills unobserved entries of each view with the per-feature mean of that
/// feature's observed entries (0 when a feature is never observed). This is
/// the default surrogate initialization.
pub fn mean_filled_views(ds: &MultiViewDataset) -> Vec<DMatrix<f64>> {
    ds.views()
        .iter()
        .map(|view| {
            let d = view.dim();
            let n = view.nsamples();
            let mut filled = view.data().clone();
            for i in 0..d {
                let mut sum = 0.0;
                let mut count = 0usize;
                for j in 0..n {
                    if view.is_observed(i, j) {
                        sum += filled[(i, j)];
                        count += 1;
                    }
                }
                let mean = if count > 0 { sum / count as f64 } else { 0.0 };
                for j in 0..n {
                    if !view.is_observed(i, j) {
                        filled[(i, j)] = mean;
                    }
                }
            }
            filled
        })
        .collect()
}

/// Deterministic embedding initialization: the top-`r` right-singular-vector
/// coordinates of the vertically concatenated (mean-filled) views, scaled by
/// their singular values.
pub fn init_embedding(filled: &[DMatrix<f64>], rank: usize) -> DMatrix<f64> {
    let n = filled[0].ncols();
    let total_d: usize = filled.iter().map(|z| z.nrows()).sum();
    let mut stacked = DMatrix::zeros(total_d, n);
    let mut offset = 0;
    for z in filled {
        stacked.view_mut((offset, 0), (z.nrows(), n)).copy_from(z);
        offset += z.nrows();
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let mut w = DMatrix::zeros(rank, n);
    for i in 0..rank.min(svd.singular_values.len()) {
        let scaled = v_t.row(i) * svd.singular_values[i];
        w.row_mut(i).copy_from(&scaled);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mvdata::{omega_sets, MultiViewDataset, ViewMatrix};
    use crate::numerics::pinv;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    // -- stop rule ---------------------------------------------------------

    #[test]
    fn stop_rule_fires_on_constant_sequence_at_second_value() {
        let rule = stop_rule_relative(1e-4, 100);
        assert_eq!(rule.evaluate(&[5.0]), None);
        assert_eq!(rule.evaluate(&[5.0, 5.0]), Some(StopReason::Converged));
    }

    #[test]
    fn stop_rule_on_halving_sequence_matches_closed_form() {
        let tol = 1e-4;
        let rule = stop_rule_relative(tol, 1000);
        // g_t = 2^-t. Relative change after value t+1 is 2^-(t+1) since
        // max(1, g_t) = 1; the first t with 2^-(t+1) < tol is the oracle.
        let oracle_t = (0..)
            .find(|&t| 0.5f64.powi(t + 1) < tol)
            .unwrap();
        let mut history = Vec::new();
        let mut fired_at = None;
        for t in 0..40 {
            history.push(0.5f64.powi(t));
            if rule.evaluate(&history) == Some(StopReason::Converged) {
                fired_at = Some(t - 1); // change between t-1 and t
                break;
            }
        }
        assert_eq!(fired_at, Some(oracle_t));
    }

    #[test]
    fn stop_rule_max_iter_on_nonconverging_sequence() {
        let rule = stop_rule_relative(1e-12, 5);
        let mut history = vec![1.0];
        let mut iterations = 0;
        loop {
            if let Some(reason) = rule.evaluate(&history) {
                assert_eq!(reason, StopReason::MaxIter);
                break;
            }
            let last = *history.last().unwrap();
            history.push(last * 0.5);
            iterations += 1;
        }
        assert_eq!(iterations, 5);
    }

    // -- incomplete-setting driver -----------------------------------------

    /// Squared-loss instance with no regularizers; exact sub-minimizers.
    struct LowRankInstance {
        ds: MultiViewDataset,
    }

    struct LowRankState {
        z: Vec<DMatrix<f64>>,
        u: Vec<DMatrix<f64>>,
        w: DMatrix<f64>,
    }

    impl LowRankInstance {
        fn init(ds: MultiViewDataset, rank: usize) -> (Self, LowRankState) {
            let z = mean_filled_views(&ds);
            let w = init_embedding(&z, rank);
            let u = z
                .iter()
                .map(|zv| zv * w.transpose() * pinv(&(&w * w.transpose())))
                .collect();
            (Self { ds }, LowRankState { z, u, w })
        }
    }

    impl AlternatingProblem for LowRankInstance {
        type State = LowRankState;

        fn objective(&self, s: &Self::State) -> f64 {
            s.z.iter()
                .zip(&s.u)
                .map(|(z, u)| (z - u * &s.w).norm_squared())
                .sum()
        }

        fn update_u(&self, s: &mut Self::State) {
            let gram_inv = pinv(&(&s.w * s.w.transpose()));
            for (u, z) in s.u.iter_mut().zip(&s.z) {
                *u = z * s.w.transpose() * &gram_inv;
            }
        }

        fn update_w(&self, s: &mut Self::State) {
            let r = s.w.nrows();
            let mut gram = DMatrix::zeros(r, r);
            let mut rhs = DMatrix::zeros(r, s.w.ncols());
            for (u, z) in s.u.iter().zip(&s.z) {
                gram += u.transpose() * u;
                rhs += u.transpose() * z;
            }
            s.w = pinv(&gram) * rhs;
        }

        fn update_z(&self, s: &mut Self::State) {
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

        fn constraints_satisfied(&self, s: &Self::State) -> bool {
            s.z.iter().enumerate().all(|(v, z)| {
                let view = self.ds.view(v);
                (0..z.ncols()).all(|j| {
                    (0..z.nrows()).all(|i| !view.is_observed(i, j) || z[(i, j)] == view.data()[(i, j)])
                })
            })
        }
    }

    fn dataset_from(views: Vec<DMatrix<f64>>) -> MultiViewDataset {
        let views = views
            .into_iter()
            .map(|d| ViewMatrix::fully_observed(d).unwrap())
            .collect();
        MultiViewDataset::new(views, None).unwrap()
    }

    #[test]
    fn incomplete_driver_matches_truncated_svd_on_full_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let x1 = randn(&mut rng, 8, 12);
        let x2 = randn(&mut rng, 6, 12);
        let ds = dataset_from(vec![x1.clone(), x2.clone()]);
        let rank = 3;

        let (problem, state) = LowRankInstance::init(ds, rank);
        let rule = stop_rule_relative(1e-12, 500);
        let (state, trace) = alternate_incomplete(&problem, state, &rule).unwrap();
        let achieved = problem.objective(&state);

        // Oracle: squared residual of the rank-r truncated SVD of the
        // concatenated data.
        let mut stacked = DMatrix::zeros(14, 12);
        stacked.view_mut((0, 0), (8, 12)).copy_from(&x1);
        stacked.view_mut((8, 0), (6, 12)).copy_from(&x2);
        let svals = stacked.svd(false, false).singular_values;
        let oracle: f64 = svals.iter().skip(rank).map(|s| s * s).sum();

        assert!(
            (achieved - oracle).abs() <= 1e-6 * oracle.max(1.0),
            "achieved {achieved}, oracle {oracle}"
        );
        assert!(trace.is_monotone(MONOTONICITY_SLACK));
    }

    #[test]
    fn incomplete_driver_single_iteration_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ds = dataset_from(vec![randn(&mut rng, 5, 9)]);
        let (problem, mut state) = LowRankInstance::init(ds, 2);
        state.w *= 2.0; // move off the optimum so the pass strictly decreases
        let rule = stop_rule_relative(1e-30, 1);
        let (_, trace) = alternate_incomplete(&problem, state, &rule).unwrap();
        assert_eq!(trace.iterations(), 1);
        assert_eq!(trace.stop_reason, StopReason::MaxIter);
    }

    #[test]
    fn incomplete_driver_zero_data_reaches_zero_objective() {
        let ds = dataset_from(vec![DMatrix::zeros(4, 6), DMatrix::zeros(3, 6)]);
        let (problem, state) = LowRankInstance::init(ds, 2);
        let rule = stop_rule_relative(1e-10, 10);
        let (state, _) = alternate_incomplete(&problem, state, &rule).unwrap();
        assert!(problem.objective(&state) <= 1e-20);
    }

    #[test]
    fn incomplete_driver_rejects_objective_increase() {
        // A broken "solver" whose W-step moves away from the minimum.
        struct Broken;
        impl AlternatingProblem for Broken {
            type State = f64;
            fn objective(&self, s: &f64) -> f64 {
                s * s
            }
            fn update_u(&self, _: &mut f64) {}
            fn update_w(&self, s: &mut f64) {
                *s += 1.0;
            }
            fn update_z(&self, _: &mut f64) {}
            fn constraints_satisfied(&self, _: &f64) -> bool {
                true
            }
        }
        let rule = stop_rule_relative(1e-8, 10);
        let err = alternate_incomplete(&Broken, 1.0, &rule).unwrap_err();
        assert!(matches!(err, FrameworkError::ObjectiveIncreased { .. }));
    }

    // -- missing-view driver -------------------------------------------------

    /// Squared-loss missing-view instance with exact per-sample solves.
    struct MissingViewInstance {
        ds: MultiViewDataset,
        omega: OmegaSets,
    }

    struct MissingViewState {
        u: Vec<DMatrix<f64>>,
        w: DMatrix<f64>,
    }

    impl MissingViewProblem for MissingViewInstance {
        type State = MissingViewState;

        fn objective(&self, s: &Self::State) -> f64 {
            let mut total = 0.0;
            for (v, view) in self.ds.views().iter().enumerate() {
                for &i in self.omega.set(v) {
                    let x = view.data().column(i);
                    let r = x - &s.u[v] * s.w.column(i);
                    total += r.norm_squared();
                }
            }
            total
        }

        fn update_u(&self, s: &mut Self::State) {
            for (v, view) in self.ds.views().iter().enumerate() {
                let cols = self.omega.set(v);
                if cols.is_empty() {
                    continue;
                }
                let x = view.data().select_columns(cols.iter());
                let w = s.w.select_columns(cols.iter());
                s.u[v] = &x * w.transpose() * pinv(&(&w * w.transpose()));
            }
        }

        fn update_embeddings(&self, s: &mut Self::State) {
            let r = s.w.nrows();
            let grams: Vec<DMatrix<f64>> =
                s.u.iter().map(|u| u.transpose() * u).collect();
            for i in 0..self.ds.nsamples() {
                let views = self.omega.views_with_sample(i);
                let mut gram = DMatrix::zeros(r, r);
                let mut rhs = nalgebra::DVector::zeros(r);
                for &v in &views {
                    gram += &grams[v];
                    rhs += s.u[v].transpose() * self.ds.view(v).data().column(i);
                }
                let wi = pinv(&gram) * rhs;
                s.w.set_column(i, &wi);
            }
        }
    }

    fn masked_two_view_dataset(rng: &mut ChaCha8Rng) -> MultiViewDataset {
        let x1 = randn(rng, 6, 10);
        let x2 = randn(rng, 5, 10);
        let mut mask1 = DMatrix::from_element(6, 10, 1.0);
        mask1.column_mut(3).fill(0.0); // sample 3 missing view 1
        let v1 = ViewMatrix::new(x1, mask1).unwrap();
        let v2 = ViewMatrix::fully_observed(x2).unwrap();
        MultiViewDataset::new(vec![v1, v2], None).unwrap()
    }

    #[test]
    fn missing_view_update_is_stationary_per_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let ds = masked_two_view_dataset(&mut rng);
        let omega = omega_sets(&ds).unwrap();
        let rank = 2;
        let filled = mean_filled_views(&ds);
        let w0 = init_embedding(&filled, rank);
        let u0: Vec<_> = filled
            .iter()
            .map(|z| z * w0.transpose() * pinv(&(&w0 * w0.transpose())))
            .collect();
        let problem = MissingViewInstance {
            ds: ds.clone(),
            omega,
        };
        let state = MissingViewState { u: u0, w: w0 };
        let rule = stop_rule_relative(1e-10, 200);
        let (state, trace) =
            alternate_missing_view(&problem, &omega_sets(&ds).unwrap(), state, &rule).unwrap();
        assert!(trace.is_monotone(MONOTONICITY_SLACK));

        // Finite-difference stationarity of the per-sample objective for the
        // sample that misses view 1 (index 3): it must only involve view 2.
        let i = 3;
        let per_sample = |wi: &nalgebra::DVector<f64>| -> f64 {
            let x = problem.ds.view(1).data().column(i);
            (x - &state.u[1] * wi).norm_squared()
        };
        let wi = state.w.column(i).clone_owned();
        let h = 1e-6;
        for c in 0..rank {
            let mut plus = wi.clone();
            plus[c] += h;
            let mut minus = wi.clone();
            minus[c] -= h;
            let grad = (per_sample(&plus) - per_sample(&minus)) / (2.0 * h);
            assert!(grad.abs() <= 1e-6 * (1.0 + per_sample(&wi)), "grad {grad}");
        }
    }

    #[test]
    fn missing_view_zero_iterations_returns_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ds = masked_two_view_dataset(&mut rng);
        let omega = omega_sets(&ds).unwrap();
        let filled = mean_filled_views(&ds);
        let w0 = init_embedding(&filled, 2);
        let u0: Vec<_> = filled
            .iter()
            .map(|z| z * w0.transpose() * pinv(&(&w0 * w0.transpose())))
            .collect();
        let problem = MissingViewInstance {
            ds,
            omega: omega.clone(),
        };
        let state = MissingViewState {
            u: u0.clone(),
            w: w0.clone(),
        };
        let rule = stop_rule_relative(1e-10, 0);
        let (state, trace) = alternate_missing_view(&problem, &omega, state, &rule).unwrap();
        assert_eq!(trace.iterations(), 0);
        assert_eq!(state.w, w0);
        assert_eq!(state.u, u0);
    }

    #[test]
    fn missing_view_agrees_with_incomplete_on_full_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let x1 = randn(&mut rng, 6, 10);
        let x2 = randn(&mut rng, 5, 10);
        let ds = dataset_from(vec![x1, x2]);
        let omega = omega_sets(&ds).unwrap();
        let rank = 2;

        let (incomplete, inc_state) = LowRankInstance::init(ds.clone(), rank);
        let rule = stop_rule_relative(1e-9, 40);
        let (inc_state, _) = alternate_incomplete(&incomplete, inc_state, &rule).unwrap();

        let filled = mean_filled_views(&ds);
        let w0 = init_embedding(&filled, rank);
        let u0: Vec<_> = filled
            .iter()
            .map(|z| z * w0.transpose() * pinv(&(&w0 * w0.transpose())))
            .collect();
        let problem = MissingViewInstance {
            ds,
            omega: omega.clone(),
        };
        let state = MissingViewState { u: u0, w: w0 };
        let (mv_state, _) = alternate_missing_view(&problem, &omega, state, &rule).unwrap();

        // With no missing views the two settings coincide.
        assert!((inc_state.w - mv_state.w).norm() <= 1e-9);
    }

    // -- initialization helpers ----------------------------------------------

    #[test]
    fn mean_fill_uses_per_feature_observed_means() {
        let data = nalgebra::dmatrix![1.0, 3.0, 100.0; 4.0, 4.0, 4.0];
        let mask = nalgebra::dmatrix![1.0, 1.0, 0.0; 1.0, 1.0, 1.0];
        let ds = MultiViewDataset::new(vec![ViewMatrix::new(data, mask).unwrap()], None).unwrap();
        let filled = mean_filled_views(&ds);
        assert_eq!(filled[0][(0, 2)], 2.0); // mean of 1 and 3, not 100
        assert_eq!(filled[0][(1, 2)], 4.0);
    }

    #[test]
    fn init_embedding_reproduces_rank_r_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        // Exactly rank-2 data: W recovers it so that U W = X at rank 2.
        let left = randn(&mut rng, 7, 2);
        let right = randn(&mut rng, 2, 9);
        let x = &left * &right;
        let w = init_embedding(&[x.clone()], 2);
        let u = &x * w.transpose() * pinv(&(&w * w.transpose()));
        assert!((u * w - x).norm() <= 1e-10);
    }
}
