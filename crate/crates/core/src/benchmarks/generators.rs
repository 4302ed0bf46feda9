//! Synthetic data generation so the classification benchmarks need no
//! downloads: Gaussian features with labels planted by a random linear
//! separator.

use super::data::{Dataset, Provenance, SparseRow};
use crate::error::{CoreError, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Fraction of labels flipped after planting; a nonzero value makes
    /// the data non-separable, keeping the gradient variance bounded away
    /// from zero at the minimizer.
    pub label_noise: f64,
}

impl SyntheticSpec {
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        SyntheticSpec { n, d, seed, label_noise: 0.0 }
    }
}

/// Gaussian features a_i ~ N(0, I), labels b_i = sign(a_i' w_true) with a
/// random unit separator w_true (ties resampled), then flipped
/// independently with probability `label_noise`.
pub fn gen_tanh_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n == 0 || spec.d == 0 {
        return Err(CoreError::InvalidParameter(
            "synthetic data needs n >= 1 and d >= 1".to_string(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.label_noise) {
        return Err(CoreError::InvalidParameter(format!(
            "label_noise = {} outside [0, 1]",
            spec.label_noise
        )));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let mut w_true: Vec<f64> = (0..spec.d).map(|_| rng.normal()).collect();
    let norm = crate::linalg::norm(&w_true).max(f64::MIN_POSITIVE);
    w_true.iter_mut().for_each(|x| *x /= norm);

    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        loop {
            let a: Vec<f64> = (0..spec.d).map(|_| rng.normal()).collect();
            let margin = crate::linalg::dot(&a, &w_true);
            if margin != 0.0 {
                rows.push(SparseRow::from_dense(&a));
                let flip = spec.label_noise > 0.0 && rng.next_f64() < spec.label_noise;
                labels.push(if flip { -margin.signum() } else { margin.signum() });
                break;
            }
        }
    }
    Ok(Dataset { rows, labels, dim: spec.d, provenance: Provenance::Synthetic })
}
