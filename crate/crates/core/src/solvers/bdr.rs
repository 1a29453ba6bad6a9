//! Block-diagonal-representation solver for incomplete multi-view data.
//!
//! The model couples per-view low-rank surrogates `Z^(v) = U^(v) W` to a
//! shared embedding `W`, self-expresses the embedding through an affinity
//! matrix (`W ~ W P`, `P` tied to an affinity `B`), and pushes `B` toward a
//! k-block-diagonal structure by penalizing the sum of the k smallest
//! eigenvalues of its Laplacian. The objective minimized here is
//!
//! ```text
//! sum_v ||Z^(v) - U^(v) W||^2 + alpha ||W - W P||^2
//!     + beta ||P - B||^2 + gamma tr(F^T L_B F),    F^T F = I
//! ```
//!
//! subject to the surrogates agreeing with the data on observed entries.
//! Each sub-step has a closed-form exact minimizer, so the basic iteration
//! never increases the objective. The accelerated scheme extrapolates the
//! surrogate update by a relaxation factor `lambda >= 1` that adapts to the
//! observed objective ratio: reset to 1 (and the step redone plainly) when
//! an extrapolated step overshoots, increased when decrease is slow.

use std::time::Instant;

use nalgebra::DMatrix;

use super::SolverError;
use crate::jella::{stop_rule_relative, IterationTrace, StopReason, TraceEntry};
use crate::mvdata::MultiViewDataset;
use crate::numerics::{
    affinity_violation, laplacian, pinv, project_to_affinity, solve_sylvester, sym_eigs_smallest,
};

/// Relative slack on the accepted-iteration monotonicity contract.
const MONOTONE_SLACK: f64 = 1e-9;

/// Solver parameters. `alpha` weights the self-expression term, `beta` the
/// affinity tie, `gamma` the block-diagonal regularizer; `clusters` is the
/// block count k and `rank` the embedding dimension r.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BdrConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub clusters: usize,
    pub rank: usize,
    /// Ratio threshold below which the relaxation factor is kept.
    pub rho1: f64,
    /// Additive relaxation-factor step.
    pub delta: f64,
    pub lambda_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// When false, every iteration runs plain (lambda fixed at 1).
    pub sor: bool,
    /// Runtime verification of state invariants after each accepted
    /// iteration.
    pub validate: bool,
}

impl BdrConfig {
    /// Defaults: beta = 1e4, rho1 = 0.7, delta = 0.2, lambda_max = 5,
    /// tol = 1e-4, max_iter = 200, SOR on, validation on.
    pub fn new(alpha: f64, gamma: f64, clusters: usize, rank: usize) -> Self {
        Self {
            alpha,
            beta: 1e4,
            gamma,
            clusters,
            rank,
            rho1: 0.7,
            delta: 0.2,
            lambda_max: 5.0,
            tol: 1e-4,
            max_iter: 200,
            seed: 0,
            sor: true,
            validate: true,
        }
    }

    pub fn validate_params(&self) -> Result<(), SolverError> {
        let fail = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.alpha > 0.0) {
            return fail(format!("alpha = {} must be > 0", self.alpha));
        }
        if !(self.beta > 0.0) {
            return fail(format!("beta = {} must be > 0", self.beta));
        }
        if !(self.gamma > 0.0) {
            return fail(format!("gamma = {} must be > 0", self.gamma));
        }
        if self.clusters == 0 || self.rank == 0 {
            return fail("clusters and rank must be >= 1".into());
        }
        if !(self.rho1 > 0.0 && self.rho1 < 1.0) {
            return fail(format!("rho1 = {} must lie in (0, 1)", self.rho1));
        }
        if !(self.delta > 0.0) {
            return fail(format!("delta = {} must be > 0", self.delta));
        }
        if !(self.lambda_max >= 1.0) {
            return fail(format!("lambda_max = {} must be >= 1", self.lambda_max));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return fail("tol must be > 0 and max_iter >= 1".into());
        }
        Ok(())
    }
}

/// Full solver state. `z_sor` carries the extrapolated surrogates feeding
/// the next accelerated pass (equal to `z` after a plain pass).
#[derive(Debug, Clone)]
pub struct BdrState {
    pub z: Vec<DMatrix<f64>>,
    pub u: Vec<DMatrix<f64>>,
    pub w: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub f: DMatrix<f64>,
    /// Relaxation factor the next pass will use.
    pub lambda: f64,
    pub z_sor: Vec<DMatrix<f64>>,
    /// Objective value after each accepted iteration.
    pub objective_trace: Vec<f64>,
}

/// Objective value of a state (always finite and nonnegative for feasible
/// states).
pub fn bdr_objective(state: &BdrState, cfg: &BdrConfig) -> f64 {
    let fit: f64 = state
        .z
        .iter()
        .zip(&state.u)
        .map(|(z, u)| (z - u * &state.w).norm_squared())
        .sum();
    let self_expr = (&state.w - &state.w * &state.p).norm_squared();
    let tie = (&state.p - &state.b).norm_squared();
    let l = laplacian(&state.b).expect("B is square");
    let reg = (state.f.transpose() * l * &state.f).trace();
    fit + cfg.alpha * self_expr + cfg.beta * tie + cfg.gamma * reg
}

/// Exact transform update: `U^(v) = Z^(v) W^T (W W^T)^+`.
pub fn bdr_step_u(z: &[DMatrix<f64>], w: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let gram_inv = pinv(&(w * w.transpose()));
    z.iter().map(|zv| zv * w.transpose() * &gram_inv).collect()
}

/// Exact embedding update: solves the stationarity system
/// `(sum_v U^T U) W + W alpha (I - P)(I - P)^T = sum_v U^T Z`.
pub fn bdr_step_w(
    u: &[DMatrix<f64>],
    z: &[DMatrix<f64>],
    p: &DMatrix<f64>,
    alpha: f64,
) -> Result<DMatrix<f64>, SolverError> {
    let r = u[0].ncols();
    let n = p.nrows();
    let mut lhs = DMatrix::zeros(r, r);
    let mut rhs = DMatrix::zeros(r, n);
    for (uv, zv) in u.iter().zip(z) {
        lhs += uv.transpose() * uv;
        rhs += uv.transpose() * zv;
    }
    let residual_map = DMatrix::identity(n, n) - p;
    let bmat = (&residual_map * residual_map.transpose()) * alpha;
    Ok(solve_sylvester(&lhs, &bmat, &rhs)?)
}

/// Exact intermediate-affinity update:
/// `P = (W^T W + (beta/alpha) I)^-1 (W^T W + (beta/alpha) B)`.
pub fn bdr_step_p(w: &DMatrix<f64>, b: &DMatrix<f64>, beta_over_alpha: f64) -> DMatrix<f64> {
    let n = w.ncols();
    let gram = w.transpose() * w;
    let lhs = &gram + DMatrix::identity(n, n) * beta_over_alpha;
    let rhs = &gram + b * beta_over_alpha;
    lhs.cholesky()
        .expect("W^T W + (beta/alpha) I is positive definite")
        .solve(&rhs)
}

/// Exact affinity update: project `Q = P - gamma/(2 beta) (q 1^T - F F^T)`
/// onto the affinity set, where `q_i` is the squared norm of row i of `F`.
pub fn bdr_step_b(p: &DMatrix<f64>, f: &DMatrix<f64>, gamma: f64, beta: f64) -> DMatrix<f64> {
    let n = p.nrows();
    let scale = gamma / (2.0 * beta);
    let outer = f * f.transpose();
    let mut q = p.clone();
    for j in 0..n {
        for i in 0..n {
            let row_norm = outer[(i, i)];
            q[(i, j)] -= scale * (row_norm - outer[(i, j)]);
        }
    }
    project_to_affinity(&q).expect("Q is square")
}

/// Exact factor update: the `k` eigenvectors of the smallest eigenvalues of
/// the Laplacian of `B`.
pub fn bdr_step_f(b: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>, SolverError> {
    let l = laplacian(b)?;
    Ok(sym_eigs_smallest(&l, k)?.vectors)
}

/// Exact surrogate update, assembled by overwrite so observed entries equal
/// the data bit-for-bit: `Z = X` on observed positions, `U W` elsewhere.
pub fn bdr_step_z(
    u: &[DMatrix<f64>],
    w: &DMatrix<f64>,
    ds: &MultiViewDataset,
) -> Vec<DMatrix<f64>> {
    ds.views()
        .iter()
        .zip(u)
        .map(|(view, uv)| {
            let approx = uv * w;
            DMatrix::from_fn(view.dim(), view.nsamples(), |i, j| {
                if view.is_observed(i, j) {
                    view.data()[(i, j)]
                } else {
                    approx[(i, j)]
                }
            })
        })
        .collect()
}

/// One plain pass: U, W, P, B, F, Z updates in sequence from the true
/// surrogates. Never increases the objective.
pub fn bdr_basic_iterate(
    state: &BdrState,
    ds: &MultiViewDataset,
    cfg: &BdrConfig,
) -> Result<BdrState, SolverError> {
    let u = bdr_step_u(&state.z, &state.w);
    let w = bdr_step_w(&u, &state.z, &state.p, cfg.alpha)?;
    let p = bdr_step_p(&w, &state.b, cfg.beta / cfg.alpha);
    let b = bdr_step_b(&p, &state.f, cfg.gamma, cfg.beta);
    let f = bdr_step_f(&b, cfg.clusters)?;
    let z = bdr_step_z(&u, &w, ds);
    Ok(BdrState {
        z_sor: z.clone(),
        z,
        u,
        w,
        p,
        b,
        f,
        lambda: state.lambda,
        objective_trace: state.objective_trace.clone(),
    })
}

/// One accelerated pass with relaxation factor `lambda >= 1`: the merged
/// transform update reads the extrapolated surrogates, the remaining steps
/// run as in the plain pass, and the extrapolated surrogates for the next
/// pass are `lambda Z + (1 - lambda) U W`. With `lambda = 1` this is
/// exactly [`bdr_basic_iterate`].
pub fn bdr_sor_iterate(
    state: &BdrState,
    ds: &MultiViewDataset,
    cfg: &BdrConfig,
    lambda: f64,
) -> Result<BdrState, SolverError> {
    if !(lambda >= 1.0) {
        return Err(SolverError::InvalidLambda(lambda));
    }
    let u = bdr_step_u(&state.z_sor, &state.w);
    let w = bdr_step_w(&u, &state.z_sor, &state.p, cfg.alpha)?;
    let p = bdr_step_p(&w, &state.b, cfg.beta / cfg.alpha);
    let b = bdr_step_b(&p, &state.f, cfg.gamma, cfg.beta);
    let f = bdr_step_f(&b, cfg.clusters)?;
    let z = bdr_step_z(&u, &w, ds);
    let z_sor = if lambda == 1.0 {
        z.clone()
    } else {
        z.iter()
            .zip(&u)
            .map(|(zv, uv)| zv * lambda + uv * &w * (1.0 - lambda))
            .collect()
    };
    Ok(BdrState {
        z,
        u,
        w,
        p,
        b,
        f,
        lambda: state.lambda,
        z_sor,
        objective_trace: state.objective_trace.clone(),
    })
}

/// Outcome of comparing consecutive objective values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoOutcome {
    /// The previous objective was already zero; nothing left to decrease.
    Converged,
    /// `g_next / g_prev`.
    Ratio(f64),
}

/// Ratio of consecutive objective values, with the zero-objective case
/// signalled instead of divided.
pub fn rho_ratio(g_prev: f64, g_next: f64) -> RhoOutcome {
    if g_prev == 0.0 {
        RhoOutcome::Converged
    } else {
        RhoOutcome::Ratio(g_next / g_prev)
    }
}

fn cosine_similarity_of_columns(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.ncols();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if norms[i] > 1e-300 && norms[j] > 1e-300 {
            w.column(i).dot(&w.column(j)) / (norms[i] * norms[j])
        } else {
            0.0
        }
    })
}

/// Deterministic initialization: mean-filled surrogates, SVD-based
/// embedding, exact transform update, affinity from the projected cosine
/// similarity of embedding columns (with `P = B`), and factor from its
/// Laplacian. The relaxation factor starts at 1.
pub fn bdr_init(ds: &MultiViewDataset, cfg: &BdrConfig) -> Result<BdrState, SolverError> {
    cfg.validate_params()?;
    let n = ds.nsamples();
    let min_dim = ds
        .views()
        .iter()
        .map(|v| v.dim())
        .min()
        .unwrap_or(0)
        .min(n);
    if cfg.rank > min_dim {
        return Err(SolverError::InvalidConfig(format!(
            "rank {} exceeds min(view dims, n) = {}",
            cfg.rank, min_dim
        )));
    }
    if cfg.clusters > n {
        return Err(SolverError::InvalidConfig(format!(
            "clusters {} exceeds sample count {}",
            cfg.clusters, n
        )));
    }
    if cfg.clusters == n {
        // The regularizer degenerates to the full Laplacian trace.
        log::warn!("clusters = n; the block-diagonal regularizer equals trace(L_B)");
    }

    let z = crate::jella::mean_filled_views(ds);
    let w = crate::jella::init_embedding(&z, cfg.rank);
    let u = bdr_step_u(&z, &w);
    let mut b =
        project_to_affinity(&cosine_similarity_of_columns(&w)).expect("similarity is square");
    // Scale the initial affinity to unit maximum row sum so the
    // self-expression operator starts near-contractive; raw cosine
    // similarities have row sums on the order of the cluster size, which
    // makes the first embedding updates collapse weakly anchored columns.
    let max_row_sum = (0..b.nrows())
        .map(|i| b.row(i).sum())
        .fold(0.0f64, f64::max);
    if max_row_sum > 1.0 {
        b /= max_row_sum;
    }
    let f = bdr_step_f(&b, cfg.clusters)?;
    Ok(BdrState {
        z_sor: z.clone(),
        z,
        u,
        w,
        p: b.clone(),
        b,
        f,
        lambda: 1.0,
        objective_trace: Vec::new(),
    })
}

/// Verifies the state invariants: surrogates equal the data bit-for-bit on
/// observed entries, `B` is exactly an affinity matrix, `F` has orthonormal
/// columns within 1e-8, and the relaxation factor is in `[1, lambda_max]`.
pub fn check_state_invariants(
    state: &BdrState,
    ds: &MultiViewDataset,
    cfg: &BdrConfig,
) -> Result<(), SolverError> {
    for (v, (z, view)) in state.z.iter().zip(ds.views()).enumerate() {
        for j in 0..view.nsamples() {
            for i in 0..view.dim() {
                if view.is_observed(i, j) && z[(i, j)] != view.data()[(i, j)] {
                    return Err(SolverError::InvariantViolated(format!(
                        "surrogate of view {v} differs from data at observed entry ({i},{j})"
                    )));
                }
            }
        }
    }
    let violation = affinity_violation(&state.b);
    if violation != 0.0 {
        return Err(SolverError::InvariantViolated(format!(
            "B leaves the affinity set by {violation:e}"
        )));
    }
    let k = state.f.ncols();
    let gram_err = (state.f.transpose() * &state.f - DMatrix::identity(k, k)).norm();
    if gram_err > 1e-8 {
        return Err(SolverError::InvariantViolated(format!(
            "F^T F deviates from identity by {gram_err:e}"
        )));
    }
    if !(state.lambda >= 1.0 && state.lambda <= cfg.lambda_max) {
        return Err(SolverError::InvariantViolated(format!(
            "lambda {} outside [1, {}]",
            state.lambda, cfg.lambda_max
        )));
    }
    Ok(())
}

/// Full fit with the adaptive relaxation scheme.
///
/// Each pass produces a candidate state; the objective ratio `rho` of the
/// candidate against the last accepted state decides what happens next:
/// `rho >= 1` rejects the candidate, resets `lambda` to 1 and redoes the
/// pass plainly; `rho1 <= rho < 1` accepts and raises `lambda` by `delta`
/// (clamped to `lambda_max`); `rho < rho1` accepts and keeps `lambda`.
/// Accepted objectives are verified non-increasing. Stops on the relative
/// rule `(tol, max_iter)` over accepted iterations.
pub fn bdr_fit(
    ds: &MultiViewDataset,
    cfg: &BdrConfig,
) -> Result<(BdrState, IterationTrace), SolverError> {
    let started = Instant::now();
    let mut state = bdr_init(ds, cfg)?;
    let mut g = bdr_objective(&state, cfg);
    if !g.is_finite() {
        return Err(SolverError::InvariantViolated(
            "initial objective is not finite".into(),
        ));
    }
    let initial_objective = g;
    let rule = stop_rule_relative(cfg.tol, cfg.max_iter);
    let mut objectives = vec![g];
    let mut entries: Vec<TraceEntry> = Vec::new();

    let stop_reason = loop {
        if let Some(reason) = rule.evaluate(&objectives) {
            break reason;
        }
        let iter_started = Instant::now();
        let lambda_eff = if cfg.sor { state.lambda } else { 1.0 };
        let mut candidate = if lambda_eff > 1.0 {
            bdr_sor_iterate(&state, ds, cfg, lambda_eff)?
        } else {
            bdr_basic_iterate(&state, ds, cfg)?
        };
        let mut g_new = bdr_objective(&candidate, cfg);
        let mut used_lambda = lambda_eff;

        let mut rho = match rho_ratio(g, g_new) {
            RhoOutcome::Converged => 0.0,
            RhoOutcome::Ratio(rho) => rho,
        };
        if rho >= 1.0 && used_lambda > 1.0 {
            // Overshoot: discard the candidate and redo from the accepted
            // state without extrapolation.
            candidate = bdr_basic_iterate(&state, ds, cfg)?;
            g_new = bdr_objective(&candidate, cfg);
            used_lambda = 1.0;
            rho = match rho_ratio(g, g_new) {
                RhoOutcome::Converged => 0.0,
                RhoOutcome::Ratio(rho) => rho,
            };
        }
        let iteration = entries.len() + 1;
        if !g_new.is_finite() {
            return Err(SolverError::InvariantViolated(format!(
                "objective not finite at iteration {iteration}"
            )));
        }
        if g_new > g + MONOTONE_SLACK * g.abs().max(1.0) {
            return Err(SolverError::ObjectiveIncreased {
                iteration,
                previous: g,
                current: g_new,
            });
        }

        candidate.lambda = if !cfg.sor {
            1.0
        } else if rho >= 1.0 {
            1.0
        } else if rho >= cfg.rho1 {
            (used_lambda + cfg.delta).min(cfg.lambda_max)
        } else {
            used_lambda
        };
        candidate.objective_trace.push(g_new);
        if cfg.validate {
            check_state_invariants(&candidate, ds, cfg)?;
        }
        state = candidate;
        g = g_new;
        objectives.push(g);
        entries.push(TraceEntry {
            objective: g,
            seconds: iter_started.elapsed().as_secs_f64(),
            lambda: Some(used_lambda),
        });
    };

    Ok((
        state,
        IterationTrace {
            entries,
            stop_reason,
            initial_objective,
            total_seconds: started.elapsed().as_secs_f64(),
        },
    ))
}

/// Convenience: stop reason plus accepted-iteration count for reporting.
pub fn fit_summary(trace: &IterationTrace) -> (StopReason, usize) {
    (trace.stop_reason, trace.iterations())
}
