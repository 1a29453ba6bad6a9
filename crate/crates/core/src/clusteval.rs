//! Clustering of learned embeddings and agreement metrics.
//!
//! Embeddings are clustered column-wise (samples are columns) by Lloyd's
//! algorithm with k-means++ seeding and restarts; all randomness is derived
//! from an explicit seed. NMI uses the sqrt normalization by default (a
//! max-normalized variant is available), with zero-entropy inputs mapping to
//! 0 by convention.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k = {k} exceeds the number of points {n}")]
    TooManyClusters { k: usize, n: usize },
    #[error("input is empty")]
    EmptyInput,
    #[error("label vectors have different lengths: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("matrices have different shapes: {a_rows}x{a_cols} vs {b_rows}x{b_cols}")]
    ShapeMismatch {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },
}

/// Hard clustering of `n` points: 1-based labels, the within-cluster sum of
/// squares of the best restart, and how many restarts ran.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub restarts_used: usize,
}

/// Clustering metrics of an embedding against ground truth, aggregated over
/// repeated k-means runs, plus optional reconstruction error and solver
/// counters filled in by the caller.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EvalReport {
    pub nmi_mean: f64,
    pub nmi_std: f64,
    pub adjri_mean: f64,
    pub adjri_std: f64,
    pub rmse: Option<f64>,
    pub iterations: usize,
    pub wall_time_seconds: f64,
}

fn squared_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm_squared()
}

fn kmeans_pp_centroids(
    points: &DMatrix<f64>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<DVector<f64>> {
    let n = points.ncols();
    let mut centroids: Vec<DVector<f64>> = Vec::with_capacity(k);
    centroids.push(points.column(rng.random_range(0..n)).clone_owned());
    let mut dist_sq: Vec<f64> = (0..n)
        .map(|j| squared_distance(&points.column(j).clone_owned(), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist_sq.iter().sum();
        let next = if total <= 0.0 {
            // All remaining points coincide with a centroid; pick uniformly.
            rng.random_range(0..n)
        } else {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (j, &d) in dist_sq.iter().enumerate() {
                if target < d {
                    chosen = j;
                    break;
                }
                target -= d;
            }
            chosen
        };
        let centroid = points.column(next).clone_owned();
        for j in 0..n {
            let d = squared_distance(&points.column(j).clone_owned(), &centroid);
            if d < dist_sq[j] {
                dist_sq[j] = d;
            }
        }
        centroids.push(centroid);
    }
    centroids
}

fn lloyd(
    points: &DMatrix<f64>,
    mut centroids: Vec<DVector<f64>>,
    max_iter: usize,
) -> (Vec<usize>, f64) {
    let n = points.ncols();
    let d = points.nrows();
    let k = centroids.len();
    let mut assignment = vec![0usize; n];
    let mut inertia = f64::INFINITY;

    for _ in 0..max_iter.max(1) {
        // Assign.
        let mut new_inertia = 0.0;
        for j in 0..n {
            let col = points.column(j).clone_owned();
            let mut best = 0usize;
            let mut best_d = squared_distance(&col, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let dist = squared_distance(&col, centroid);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            assignment[j] = best;
            new_inertia += best_d;
        }
        // Lloyd iterations never increase the within-cluster sum of squares.
        debug_assert!(new_inertia <= inertia * (1.0 + 1e-12) + 1e-12);
        let converged = new_inertia >= inertia - 1e-15 * inertia.abs().max(1.0);
        inertia = new_inertia;
        if converged {
            break;
        }
        // Update.
        let mut sums = vec![DVector::zeros(d); k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            sums[assignment[j]] += points.column(j);
            counts[assignment[j]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = &sums[c] / counts[c] as f64;
            } else {
                // Re-seed an empty cluster at the point farthest from its
                // centroid.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = squared_distance(
                            &points.column(a).clone_owned(),
                            &centroids[assignment[a]],
                        );
                        let db = squared_distance(
                            &points.column(b).clone_owned(),
                            &centroids[assignment[b]],
                        );
                        da.total_cmp(&db)
                    })
                    .unwrap();
                centroids[c] = points.column(far).clone_owned();
            }
        }
    }
    (assignment, inertia)
}

/// Lloyd's algorithm with k-means++ seeding over `points` columns.
///
/// Runs `restarts` independent seedings and returns the lowest-inertia
/// clustering with 1-based labels. Deterministic per seed.
pub fn kmeans(
    points: &DMatrix<f64>,
    k: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<ClusteringResult, EvalError> {
    let n = points.ncols();
    if n == 0 || points.nrows() == 0 {
        return Err(EvalError::EmptyInput);
    }
    if k == 0 || k > n {
        return Err(EvalError::TooManyClusters { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let restarts = restarts.max(1);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts {
        let centroids = kmeans_pp_centroids(points, k, &mut rng);
        let (assignment, inertia) = lloyd(points, centroids, max_iter);
        if best.as_ref().map_or(true, |(_, b)| inertia < *b) {
            best = Some((assignment, inertia));
        }
    }
    let (assignment, inertia) = best.unwrap();
    Ok(ClusteringResult {
        labels: assignment.iter().map(|&c| c + 1).collect(),
        inertia,
        restarts_used: restarts,
    })
}

fn contingency(a: &[usize], b: &[usize]) -> (Vec<Vec<usize>>, Vec<usize>, Vec<usize>) {
    let mut a_ids: Vec<usize> = a.to_vec();
    a_ids.sort_unstable();
    a_ids.dedup();
    let mut b_ids: Vec<usize> = b.to_vec();
    b_ids.sort_unstable();
    b_ids.dedup();
    let a_index = |l: usize| a_ids.binary_search(&l).unwrap();
    let b_index = |l: usize| b_ids.binary_search(&l).unwrap();
    let mut table = vec![vec![0usize; b_ids.len()]; a_ids.len()];
    for (&la, &lb) in a.iter().zip(b) {
        table[a_index(la)][b_index(lb)] += 1;
    }
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..b_ids.len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    (table, row_sums, col_sums)
}

/// Which product of entropies normalizes the mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmiNormalization {
    /// sqrt(H(a) H(b)) — the default.
    Sqrt,
    /// max(H(a), H(b)).
    Max,
}

/// Normalized mutual information with an explicit normalization choice.
/// Returns 0 when either labelling has zero entropy.
pub fn nmi_with(a: &[usize], b: &[usize], norm: NmiNormalization) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = a.len() as f64;
    let (table, row_sums, col_sums) = contingency(a, b);
    let entropy = |sums: &[usize]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&row_sums);
    let hb = entropy(&col_sums);
    if ha <= 0.0 || hb <= 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let pij = count as f64 / n;
            let pi = row_sums[i] as f64 / n;
            let pj = col_sums[j] as f64 / n;
            mi += pij * (pij / (pi * pj)).ln();
        }
    }
    let denom = match norm {
        NmiNormalization::Sqrt => (ha * hb).sqrt(),
        NmiNormalization::Max => ha.max(hb),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Normalized mutual information with sqrt normalization.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64, EvalError> {
    nmi_with(a, b, NmiNormalization::Sqrt)
}

fn choose2(x: usize) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index: pair-counting agreement corrected for chance under
/// the permutation model. 1 for identical partitions, about 0 for random
/// ones, negative for worse-than-chance agreement.
pub fn adj_rand_index(a: &[usize], b: &[usize]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let (table, row_sums, col_sums) = contingency(a, b);
    let index: f64 = table
        .iter()
        .flat_map(|row| row.iter())
        .map(|&nij| choose2(nij))
        .sum();
    let sum_a: f64 = row_sums.iter().map(|&s| choose2(s)).sum();
    let sum_b: f64 = col_sums.iter().map(|&s| choose2(s)).sum();
    let total = choose2(a.len());
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() <= f64::EPSILON * max_index.abs().max(1.0) {
        // Both partitions are trivial (all-singletons or all-one-cluster);
        // they agree exactly.
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// Root mean square error `||M* - M|| / sqrt(m n)`.
pub fn rmse(m: &DMatrix<f64>, mstar: &DMatrix<f64>) -> Result<f64, EvalError> {
    if m.shape() != mstar.shape() {
        return Err(EvalError::ShapeMismatch {
            a_rows: m.nrows(),
            a_cols: m.ncols(),
            b_rows: mstar.nrows(),
            b_cols: mstar.ncols(),
        });
    }
    let count = (m.nrows() * m.ncols()) as f64;
    Ok((mstar - m).norm() / count.sqrt())
}

/// Clusters an embedding `repeats` times with per-repeat sub-seeds and
/// reports mean and (population) standard deviation of NMI and adjusted
/// Rand index against the given ground truth.
///
/// `rmse`, `iterations`, and `wall_time_seconds` are left at their neutral
/// values for the caller to fill in.
pub fn evaluate_embedding(
    w: &DMatrix<f64>,
    truth: &[usize],
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if truth.len() != w.ncols() {
        return Err(EvalError::LengthMismatch {
            a: truth.len(),
            b: w.ncols(),
        });
    }
    let repeats = repeats.max(1);
    let mut nmis = Vec::with_capacity(repeats);
    let mut aris = Vec::with_capacity(repeats);
    for rep in 0..repeats {
        let sub_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(rep as u64);
        let clustering = kmeans(w, k, 1, 100, sub_seed)?;
        nmis.push(nmi(&clustering.labels, truth)?);
        aris.push(adj_rand_index(&clustering.labels, truth)?);
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let std = |xs: &[f64], mu: f64| {
        (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
    };
    let nmi_mean = mean(&nmis);
    let adjri_mean = mean(&aris);
    Ok(EvalReport {
        nmi_mean,
        nmi_std: std(&nmis, nmi_mean),
        adjri_mean,
        adjri_std: std(&aris, adjri_mean),
        rmse: None,
        iterations: 0,
        wall_time_seconds: 0.0,
    })
}
