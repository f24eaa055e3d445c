//! Random subsampling and grid-aligned histogram density estimates.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::points::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsampleSpec {
    pub k: usize,
    pub seed: u64,
}

/// Draws `k` distinct points uniformly without replacement. The result is a
/// pure function of the cloud, `k` and the seed.
pub fn subsample(cloud: &PointCloud, spec: SubsampleSpec) -> Result<PointCloud> {
    let n = cloud.len();
    if spec.k == 0 || spec.k > n {
        return Err(Error::InvalidArgument(format!(
            "subsample size {} must lie in 1..={n}",
            spec.k
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut indices: Vec<usize> = (0..n).collect();
    let (chosen, _) = indices.partial_shuffle(&mut rng, spec.k);
    cloud.select(chosen)
}

/// Errors with the count and the first few indices of points that fall
/// outside the closed box of `spec`.
pub fn check_domain(cloud: &PointCloud, spec: &GridSpec) -> Result<()> {
    spec.check_dim(cloud.dim())?;
    let mut offenders = Vec::new();
    let mut outside = 0;
    for (i, y) in cloud.iter().enumerate() {
        if !spec.contains(y) {
            outside += 1;
            if offenders.len() < 10 {
                offenders.push(i);
            }
        }
    }
    if outside > 0 {
        return Err(Error::OutOfDomain {
            count: outside,
            indices: offenders,
        });
    }
    Ok(())
}

/// Histogram estimate aligned with `spec`: each node holds the fraction of
/// the sample in its forward cell `[x, x + h)`, divided by `h^d`.
///
/// Cells are half-open except on the top faces of the domain, so every
/// sample is counted exactly once and `h^d Σ f̂ = 1`.
pub fn histogram_density(sample: &PointCloud, spec: &GridSpec) -> Result<GridField> {
    check_domain(sample, spec)?;
    let mut counts = vec![0u64; spec.len()];
    for y in sample.iter() {
        counts[spec.flat_index(&spec.floor_to_grid(y)?)] += 1;
    }
    let scale = 1.0 / (sample.len() as f64 * spec.h().powi(spec.dim() as i32));
    GridField::new(
        spec.clone(),
        counts.into_iter().map(|c| c as f64 * scale).collect(),
    )
}

/// Hypercube grid with `cells` cells per axis around the cloud's bounding
/// box, padded by one cell on every side.
pub fn fit_domain(cloud: &PointCloud, cells: usize) -> Result<GridSpec> {
    if cells < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 cells per axis, got {cells}"
        )));
    }
    let (lo, hi) = cloud.bounds();
    let extent = lo.iter().zip(&hi).map(|(l, u)| u - l).fold(0.0, f64::max);
    let extent = if extent > 0.0 { extent } else { 1.0 };
    let h = extent / (cells - 2) as f64;
    let lo = lo.iter().map(|l| l - h).collect();
    GridSpec::hypercube(lo, h * cells as f64, cells)
}
