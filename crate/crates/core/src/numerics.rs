//! Dense linear-algebra kernels for the solvers.
//!
//! Everything here is deterministic: eigenvalues are returned ascending and
//! eigenvector signs are fixed by making the largest-magnitude entry of each
//! vector positive. Tolerances: 1e-8 for residual/symmetry checks, 1e-10 for
//! feasibility thresholds.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Symmetry / affinity-membership tolerance used by input validation.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Minimum pairwise eigenvalue-sum magnitude accepted by the Sylvester solver.
pub const SYLVESTER_GAP_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("k = {k} is out of range for an {n}x{n} matrix")]
    KOutOfRange { k: usize, n: usize },
    #[error("input is not symmetric: asymmetry {asymmetry:.3e} exceeds tolerance")]
    Asymmetric { asymmetry: f64 },
    #[error("matrix is not an affinity matrix: violation {violation:.3e} exceeds tolerance")]
    NotAffinity { violation: f64 },
    #[error(
        "Sylvester operator is ill-posed: minimum eigenvalue-sum magnitude {min_gap:.3e} <= {SYLVESTER_GAP_TOL:.0e}"
    )]
    IllPosedSylvester { min_gap: f64 },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
}

/// Ascending eigenvalues and the matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SymEigResult {
    /// Eigenvalues sorted ascending, length k.
    pub values: DVector<f64>,
    /// n x k matrix whose columns are the corresponding eigenvectors.
    pub vectors: DMatrix<f64>,
}

/// Moore-Penrose pseudo-inverse via SVD.
///
/// Singular values below `max(m, n) * eps * sigma_max` are treated as zero,
/// so the zero matrix maps to the zero matrix.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let smax = svd.singular_values.max();
    let cutoff = (rows.max(cols) as f64) * f64::EPSILON * smax;
    let inv_s = DVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values
            .iter()
            .map(|&s| if s > cutoff { 1.0 / s } else { 0.0 }),
    );
    // pinv = V * S^+ * U^T, assembled without forming the diagonal.
    let mut ut = u.transpose();
    for (i, mut row) in ut.row_iter_mut().enumerate() {
        row *= inv_s[i];
    }
    v_t.transpose() * ut
}

fn check_square(m: &DMatrix<f64>) -> Result<usize, NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn scale_of(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(1.0f64, |acc, &x| acc.max(x.abs()))
}

/// Graph Laplacian `L = Diag(B 1) - B`.
pub fn laplacian(b: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
    let n = check_square(b)?;
    let degrees: Vec<f64> = (0..n).map(|i| b.row(i).sum()).collect();
    let mut l = -b.clone();
    for i in 0..n {
        l[(i, i)] += degrees[i];
    }
    Ok(l)
}

/// Eigenvectors of the `k` smallest eigenvalues of a symmetric matrix.
///
/// The input must be symmetric within [`SYMMETRY_TOL`] (relative to its
/// largest entry); it is symmetrized before decomposition. Eigenvalues come
/// back ascending and each eigenvector's sign is fixed so its
/// largest-magnitude entry is positive.
pub fn sym_eigs_smallest(s: &DMatrix<f64>, k: usize) -> Result<SymEigResult, NumericsError> {
    let n = check_square(s)?;
    if k == 0 || k > n {
        return Err(NumericsError::KOutOfRange { k, n });
    }
    let asym = asymmetry(s);
    if asym > SYMMETRY_TOL * scale_of(s) {
        return Err(NumericsError::Asymmetric { asymmetry: asym });
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = DVector::from_iterator(k, order.iter().take(k).map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, k);
    for (out_col, &src_col) in order.iter().take(k).enumerate() {
        let mut col = eig.eigenvectors.column(src_col).clone_owned();
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(out_col, &col);
    }
    Ok(SymEigResult { values, vectors })
}

/// How far `b` is from the affinity set (zero diagonal, symmetric,
/// nonnegative). Zero for exact members.
pub fn affinity_violation(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows().min(b.ncols());
    let diag: f64 = (0..n).map(|i| b[(i, i)].abs()).fold(0.0, f64::max);
    let neg: f64 = b.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max);
    diag.max(neg).max(asymmetry(b))
}

fn check_affinity(b: &DMatrix<f64>) -> Result<(), NumericsError> {
    check_square(b)?;
    let violation = affinity_violation(b);
    if violation > SYMMETRY_TOL * scale_of(b) {
        return Err(NumericsError::NotAffinity { violation });
    }
    Ok(())
}

/// Sum of the `k` smallest eigenvalues of the Laplacian of an affinity
/// matrix. Zero exactly when the affinity graph has at least `k` connected
/// components (up to eigensolver accuracy).
pub fn block_diag_regularizer(b: &DMatrix<f64>, k: usize) -> Result<f64, NumericsError> {
    check_affinity(b)?;
    let l = laplacian(b)?;
    let eig = sym_eigs_smallest(&l, k)?;
    Ok(eig.values.sum())
}

/// Nearest affinity matrix to `a` in Frobenius norm: drop the diagonal,
/// symmetrize, clip negatives. The result is in the affinity set exactly
/// (zero diagonal and bitwise symmetry by construction).
pub fn project_to_affinity(a: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
    let n = check_square(a)?;
    let mut b = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i == j {
                continue;
            }
            b[(i, j)] = (0.5 * (a[(i, j)] + a[(j, i)])).max(0.0);
        }
    }
    Ok(b)
}

/// Solves `A W + W Bmat = C` for symmetric `A` (r x r) and `Bmat` (n x n).
///
/// Both operands are eigendecomposed; in the joint eigenbasis the equation
/// is entrywise division by eigenvalue sums, so the r x n unknown never
/// requires a Kronecker system. Errors when some eigenvalue sum's magnitude
/// is at or below [`SYLVESTER_GAP_TOL`] (overlapping spectra).
pub fn solve_sylvester(
    a: &DMatrix<f64>,
    bmat: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>, NumericsError> {
    let r = check_square(a)?;
    let n = check_square(bmat)?;
    if c.nrows() != r || c.ncols() != n {
        return Err(NumericsError::DimensionMismatch {
            context: format!(
                "rhs is {}x{}, expected {}x{} from the operand shapes",
                c.nrows(),
                c.ncols(),
                r,
                n
            ),
        });
    }
    let eig_a = sym_eigs_smallest(a, r)?;
    let eig_b = sym_eigs_smallest(bmat, n)?;

    let mut min_gap = f64::INFINITY;
    for i in 0..r {
        for j in 0..n {
            min_gap = min_gap.min((eig_a.values[i] + eig_b.values[j]).abs());
        }
    }
    if min_gap <= SYLVESTER_GAP_TOL {
        return Err(NumericsError::IllPosedSylvester { min_gap });
    }

    let mut tilde = eig_a.vectors.transpose() * c * &eig_b.vectors;
    for j in 0..n {
        for i in 0..r {
            tilde[(i, j)] /= eig_a.values[i] + eig_b.values[j];
        }
    }
    Ok(&eig_a.vectors * tilde * eig_b.vectors.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    fn random_affinity(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.0..1.0));
        project_to_affinity(&raw).unwrap()
    }

    #[test]
    fn pinv_identity_and_zero() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert!((pinv(&id) - &id).norm() < 1e-12);
        let z = DMatrix::<f64>::zeros(3, 5);
        assert_eq!(pinv(&z), DMatrix::zeros(5, 3));
    }

    #[test]
    fn pinv_satisfies_penrose_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = randn(&mut rng, 5, 3);
            let p = pinv(&m);
            let scale = m.norm().max(1.0);
            assert!((&m * &p * &m - &m).norm() <= 1e-8 * scale);
            assert!((&p * &m * &p - &p).norm() <= 1e-8 * p.norm().max(1.0));
            let mp = &m * &p;
            assert!((&mp - mp.transpose()).norm() <= 1e-8);
            let pm = &p * &m;
            assert!((&pm - pm.transpose()).norm() <= 1e-8);
        }
    }

    #[test]
    fn pinv_is_involutive_for_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let m = randn(&mut rng, 4, 6);
            let back = pinv(&pinv(&m));
            assert!((back - &m).norm() <= 1e-7 * m.norm().max(1.0));
        }
    }

    #[test]
    fn laplacian_basics() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(laplacian(&z).unwrap(), z);

        let b = nalgebra::dmatrix![0.0, 1.0; 1.0, 0.0];
        let l = laplacian(&b).unwrap();
        assert_eq!(l, nalgebra::dmatrix![1.0, -1.0; -1.0, 1.0]);

        assert!(matches!(
            laplacian(&DMatrix::zeros(2, 3)),
            Err(NumericsError::NonSquare { .. })
        ));
    }

    #[test]
    fn laplacian_of_symmetric_nonnegative_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let b = random_affinity(&mut rng, 8);
            let l = laplacian(&b).unwrap();
            let eig = sym_eigs_smallest(&l, 1).unwrap();
            assert!(eig.values[0] >= -1e-10, "lambda_min = {}", eig.values[0]);
            // Row sums vanish for symmetric B.
            for i in 0..8 {
                assert!(l.row(i).sum().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sym_eigs_identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(3, 3);
        let eig = sym_eigs_smallest(&id, 2).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let eig = sym_eigs_smallest(&d, 1).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        let v = eig.vectors.column(0);
        // e_2 up to sign; sign convention makes the big entry positive.
        assert!((v[1] - 1.0).abs() < 1e-12);
        assert!(v[0].abs() < 1e-12 && v[2].abs() < 1e-12);
    }

    #[test]
    fn sym_eigs_two_cliques_gives_two_zero_eigenvalues() {
        // Two disconnected 3-cliques.
        let mut b = DMatrix::zeros(6, 6);
        for block in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        b[(block * 3 + i, block * 3 + j)] = 1.0;
                    }
                }
            }
        }
        let l = laplacian(&b).unwrap();
        let eig = sym_eigs_smallest(&l, 2).unwrap();
        assert!(eig.values[0].abs() < 1e-10);
        assert!(eig.values[1].abs() < 1e-10);
    }

    #[test]
    fn sym_eigs_validates_inputs() {
        let asym = nalgebra::dmatrix![0.0, 1.0; 0.0, 0.0];
        assert!(matches!(
            sym_eigs_smallest(&asym, 1),
            Err(NumericsError::Asymmetric { .. })
        ));
        let id = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(
            sym_eigs_smallest(&id, 0),
            Err(NumericsError::KOutOfRange { .. })
        ));
        assert!(matches!(
            sym_eigs_smallest(&id, 4),
            Err(NumericsError::KOutOfRange { .. })
        ));
    }

    #[test]
    fn sym_eigs_residual_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let g = randn(&mut rng, 10, 10);
            let s = (&g + g.transpose()) * 0.5;
            let eig = sym_eigs_smallest(&s, 10).unwrap();
            let residual = &s * &eig.vectors
                - &eig.vectors * DMatrix::from_diagonal(&eig.values);
            assert!(residual.norm() <= 1e-7 * s.norm().max(1.0));
            let gram = eig.vectors.transpose() * &eig.vectors;
            assert!((gram - DMatrix::identity(10, 10)).norm() <= 1e-8);
            for i in 1..10 {
                assert!(eig.values[i] >= eig.values[i - 1]);
            }
        }
    }

    #[test]
    fn block_diag_regularizer_counts_components() {
        // Two all-ones off-diagonal blocks: two components, k = 2 -> 0.
        let mut b = DMatrix::zeros(6, 6);
        for block in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        b[(block * 3 + i, block * 3 + j)] = 1.0;
                    }
                }
            }
        }
        assert!(block_diag_regularizer(&b, 2).unwrap().abs() < 1e-10);
        // Only two components: the third-smallest Laplacian eigenvalue of two
        // triangles is 3, so k = 3 is strictly positive.
        assert!((block_diag_regularizer(&b, 3).unwrap() - 3.0).abs() < 1e-8);

        let z = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(block_diag_regularizer(&z, 3).unwrap(), 0.0);
    }

    #[test]
    fn block_diag_regularizer_full_sum_equals_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let b = random_affinity(&mut rng, 7);
            let l = laplacian(&b).unwrap();
            let total = block_diag_regularizer(&b, 7).unwrap();
            assert!((total - l.trace()).abs() <= 1e-8 * l.trace().max(1.0));
        }
    }

    #[test]
    fn block_diag_regularizer_rejects_non_affinity() {
        let bad = nalgebra::dmatrix![0.0, -1.0; -1.0, 0.0];
        assert!(matches!(
            block_diag_regularizer(&bad, 1),
            Err(NumericsError::NotAffinity { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        // Fixed point: already an affinity matrix.
        let b = nalgebra::dmatrix![0.0, 2.0; 2.0, 0.0];
        assert_eq!(project_to_affinity(&b).unwrap(), b);

        // Hand-computed: strip diagonal, symmetrize, clip.
        let a = nalgebra::dmatrix![1.0, -2.0; 3.0, 4.0];
        let expected = nalgebra::dmatrix![0.0, 0.5; 0.5, 0.0];
        assert_eq!(project_to_affinity(&a).unwrap(), expected);

        // All-negative input clips to zero.
        let neg = DMatrix::from_element(3, 3, -1.0);
        assert_eq!(project_to_affinity(&neg).unwrap(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn projection_beats_random_feasible_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let n = rng.random_range(2..=5);
            let a = randn(&mut rng, n, n);
            let best = project_to_affinity(&a).unwrap();
            let best_dist = (&best - &a).norm();
            for _ in 0..1000 {
                let candidate = random_affinity(&mut rng, n);
                assert!((candidate - &a).norm() >= best_dist - 1e-12);
            }
        }
    }

    #[test]
    fn projection_output_is_exactly_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = randn(&mut rng, 6, 6);
            let b = project_to_affinity(&a).unwrap();
            assert_eq!(affinity_violation(&b), 0.0);
        }
    }

    #[test]
    fn sylvester_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = randn(&mut rng, 3, 4);

        // A = I, B = 0 -> W = C.
        let w = solve_sylvester(
            &DMatrix::identity(3, 3),
            &DMatrix::zeros(4, 4),
            &c,
        )
        .unwrap();
        assert!((w - &c).norm() < 1e-10);

        // A = 2I, B = 2I -> W = C / 4.
        let c2 = randn(&mut rng, 3, 3);
        let two = DMatrix::<f64>::identity(3, 3) * 2.0;
        let w = solve_sylvester(&two, &two, &c2).unwrap();
        assert!((w - &c2 / 4.0).norm() < 1e-10);
    }

    #[test]
    fn sylvester_residual_on_random_spd_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let r = rng.random_range(1..=6);
            let n = rng.random_range(1..=12);
            let ga = randn(&mut rng, r, r);
            let a = &ga * ga.transpose() + DMatrix::identity(r, r) * 0.5;
            let gb = randn(&mut rng, n, n);
            let bmat = &gb * gb.transpose();
            let c = randn(&mut rng, r, n);
            let w = solve_sylvester(&a, &bmat, &c).unwrap();
            let residual = (&a * &w + &w * &bmat - &c).norm();
            assert!(residual <= 1e-8 * c.norm().max(1.0), "residual {residual}");
        }
    }

    #[test]
    fn sylvester_agrees_with_kronecker_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let r = rng.random_range(1..=4);
            let n = rng.random_range(1..=6);
            let ga = randn(&mut rng, r, r);
            let a = &ga * ga.transpose() + DMatrix::identity(r, r);
            let gb = randn(&mut rng, n, n);
            let bmat = &gb * gb.transpose();
            let c = randn(&mut rng, r, n);

            let w = solve_sylvester(&a, &bmat, &c).unwrap();

            // Vectorized direct solve: (I (x) A + B^T (x) I) vec(W) = vec(C).
            let mut k = DMatrix::zeros(r * n, r * n);
            for j in 0..n {
                k.view_mut((j * r, j * r), (r, r)).copy_from(&a);
            }
            for jc in 0..n {
                for jr in 0..n {
                    let scale = bmat[(jr, jc)]; // B^T[(jc, jr)]
                    for i in 0..r {
                        k[(jc * r + i, jr * r + i)] += scale;
                    }
                }
            }
            let vec_c = DVector::from_iterator(r * n, c.iter().copied());
            let vec_w = k.lu().solve(&vec_c).unwrap();
            let w_direct = DMatrix::from_iterator(r, n, vec_w.iter().copied());
            assert!((w - w_direct).norm() <= 1e-6);
        }
    }

    #[test]
    fn sylvester_rejects_overlapping_spectra() {
        // A = 0 and B = 0 share eigenvalue-sum 0.
        let a = DMatrix::<f64>::zeros(2, 2);
        let b = DMatrix::<f64>::zeros(3, 3);
        let c = DMatrix::<f64>::from_element(2, 3, 1.0);
        assert!(matches!(
            solve_sylvester(&a, &b, &c),
            Err(NumericsError::IllPosedSylvester { .. })
        ));
    }

    #[test]
    fn sylvester_rejects_bad_shapes() {
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::<f64>::identity(3, 3);
        let c = DMatrix::<f64>::zeros(2, 2);
        assert!(matches!(
            solve_sylvester(&a, &b, &c),
            Err(NumericsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ky_fan_identity_holds_on_random_affinities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(3..=12);
            let b = random_affinity(&mut rng, n);
            let l = laplacian(&b).unwrap();
            for k in 1..=n.min(4) {
                let reg = block_diag_regularizer(&b, k).unwrap();
                let f = sym_eigs_smallest(&l, k).unwrap().vectors;
                let trace = (f.transpose() * &l * &f).trace();
                assert!(
                    (reg - trace).abs() <= 1e-8,
                    "ky fan gap {} for n={n} k={k}",
                    (reg - trace).abs()
                );
            }
        }
    }
}
