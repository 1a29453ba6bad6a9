//! Synthetic union-of-subspaces data.
//!
//! Each cluster draws shared latent coordinates (with a cluster-specific mean
//! offset so the clusters are separated in space) and one linear map per
//! view. At zero noise, the per-cluster submatrix of every view has rank at
//! most `subspace_dim`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{MultiViewDataset, MvDataError, ViewMatrix};

/// Parameters for [`synth_union_of_subspaces`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Number of clusters (subspaces).
    pub clusters: usize,
    /// Intrinsic dimension of each subspace.
    pub subspace_dim: usize,
    /// Ambient dimension of each view.
    pub ambient_dims: Vec<usize>,
    /// Samples per cluster.
    pub per_cluster: usize,
    /// Standard deviation of additive Gaussian noise in ambient space.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<(), MvDataError> {
        let err = |msg: String| Err(MvDataError::InvalidSynthSpec(msg));
        if self.clusters == 0 {
            return err("clusters must be >= 1".into());
        }
        if self.per_cluster == 0 {
            return err("per_cluster must be >= 1".into());
        }
        if self.ambient_dims.is_empty() {
            return err("at least one view is required".into());
        }
        if self.subspace_dim == 0 {
            return err("subspace_dim must be >= 1".into());
        }
        let min_ambient = *self.ambient_dims.iter().min().unwrap();
        if self.subspace_dim >= min_ambient {
            return err(format!(
                "subspace_dim {} must be smaller than the minimum ambient dimension {}",
                self.subspace_dim, min_ambient
            ));
        }
        if !(self.noise_sigma >= 0.0) {
            return err(format!("noise_sigma {} must be >= 0", self.noise_sigma));
        }
        Ok(())
    }

    /// Total sample count `clusters * per_cluster`.
    pub fn nsamples(&self) -> usize {
        self.clusters * self.per_cluster
    }
}

// Separation between cluster means in latent space, in units of the latent
// coordinate spread.
const CLUSTER_MEAN_SCALE: f64 = 6.0;

/// Generates a multi-view dataset whose samples lie on a union of
/// low-dimensional subspaces.
///
/// Per cluster: latent coordinates are `mu_j + e` with `e ~ N(0, I)` and a
/// cluster mean `mu_j ~ N(0, CLUSTER_MEAN_SCALE^2 I)` shared across views;
/// per view a map `M_j^(v)` sends latent coordinates to ambient space, and
/// optional isotropic noise is added. Labels (1-based, cluster-major column
/// order) are attached to the returned dataset. Deterministic per seed.
pub fn synth_union_of_subspaces(spec: &SynthSpec) -> Result<MultiViewDataset, MvDataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.nsamples();
    let normal = StandardNormal;
    let draw = |rng: &mut ChaCha8Rng| -> f64 { normal.sample(rng) };

    // Latent coordinates per cluster, shared across views.
    let mut latents: Vec<DMatrix<f64>> = Vec::with_capacity(spec.clusters);
    for _ in 0..spec.clusters {
        let mu: Vec<f64> = (0..spec.subspace_dim)
            .map(|_| CLUSTER_MEAN_SCALE * draw(&mut rng))
            .collect();
        let mut h = DMatrix::from_fn(spec.subspace_dim, spec.per_cluster, |_, _| draw(&mut rng));
        for mut col in h.column_iter_mut() {
            for (i, x) in col.iter_mut().enumerate() {
                *x += mu[i];
            }
        }
        latents.push(h);
    }

    let mut views = Vec::with_capacity(spec.ambient_dims.len());
    for &d in &spec.ambient_dims {
        let scale = 1.0 / (spec.subspace_dim as f64).sqrt();
        let mut data = DMatrix::zeros(d, n);
        for (j, latent) in latents.iter().enumerate() {
            let map = DMatrix::from_fn(d, spec.subspace_dim, |_, _| scale * draw(&mut rng));
            let block = map * latent;
            data.view_mut((0, j * spec.per_cluster), (d, spec.per_cluster))
                .copy_from(&block);
        }
        if spec.noise_sigma > 0.0 {
            for x in data.iter_mut() {
                *x += spec.noise_sigma * draw(&mut rng);
            }
        }
        views.push(ViewMatrix::fully_observed(data)?);
    }

    let labels: Vec<usize> = (0..spec.clusters)
        .flat_map(|j| std::iter::repeat(j + 1).take(spec.per_cluster))
        .collect();
    MultiViewDataset::new(views, Some(labels))
}
