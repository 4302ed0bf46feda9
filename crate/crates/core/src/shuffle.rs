//! Permutation streams for reshuffling solvers and the
//! without-replacement variance law used to validate them.

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::rng::SplitMix64;

/// How a stream draws the per-epoch permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShuffleMode {
    /// Fresh uniform permutation every epoch.
    IndependentPerEpoch,
    /// One uniform permutation at epoch 1, repeated thereafter.
    ShuffleOnce,
    /// Identity permutation every epoch.
    FixedIncremental,
}

impl ShuffleMode {
    pub fn parse(s: &str) -> Result<ShuffleMode> {
        match s {
            "independent" | "independent-per-epoch" => Ok(ShuffleMode::IndependentPerEpoch),
            "shuffle-once" => Ok(ShuffleMode::ShuffleOnce),
            "fixed" | "fixed-incremental" => Ok(ShuffleMode::FixedIncremental),
            other => Err(CoreError::InvalidParameter(format!("unknown shuffle mode '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShuffleMode::IndependentPerEpoch => "independent-per-epoch",
            ShuffleMode::ShuffleOnce => "shuffle-once",
            ShuffleMode::FixedIncremental => "fixed-incremental",
        }
    }
}

/// Stream of permutations of [0, n). The permutation for epoch k is a pure
/// function of (seed, k), so any epoch is reproducible without replaying
/// the ones before it.
#[derive(Debug, Clone)]
pub struct PermutationStream {
    n: usize,
    mode: ShuffleMode,
    seed: u64,
    next_epoch: u64,
}

impl PermutationStream {
    pub fn new(n: usize, mode: ShuffleMode, seed: u64) -> Self {
        assert!(n > 0, "permutation stream needs n >= 1");
        PermutationStream { n, mode, seed, next_epoch: 1 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Permutation for a specific epoch (1-based), independent of stream
    /// position.
    pub fn permutation_for_epoch(&self, epoch: u64) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.n).collect();
        match self.mode {
            ShuffleMode::FixedIncremental => {}
            ShuffleMode::ShuffleOnce => {
                SplitMix64::substream(self.seed, 1).shuffle(&mut perm);
            }
            ShuffleMode::IndependentPerEpoch => {
                SplitMix64::substream(self.seed, epoch).shuffle(&mut perm);
            }
        }
        perm
    }

    /// Next permutation in stream order.
    pub fn next_permutation(&mut self) -> Vec<usize> {
        let perm = self.permutation_for_epoch(self.next_epoch);
        self.next_epoch += 1;
        perm
    }
}

/// Population variance sigma^2 = (1/n) sum_i ||X_i - mean||^2 of a vector set.
pub fn population_variance(xs: &[Vec<f64>]) -> f64 {
    let n = xs.len();
    if n <= 1 {
        return 0.0;
    }
    let dim = xs[0].len();
    let mut mean = vec![0.0; dim];
    for x in xs {
        linalg::axpy(1.0, x, &mut mean);
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    xs.iter().map(|x| linalg::dist_sq(x, &mean)).sum::<f64>() / n as f64
}

/// Closed-form variance of a without-replacement partial mean:
/// E ||mean of t sampled X - mean of all X||^2 = (n - t) / (t (n - 1)) * sigma^2.
pub fn expected_partial_variance(xs: &[Vec<f64>], t: usize) -> Result<f64> {
    let n = xs.len();
    if t == 0 || t > n {
        return Err(CoreError::InvalidParameter(format!(
            "partial sample size t = {t} out of range [1, {n}]"
        )));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let factor = (n - t) as f64 / (t as f64 * (n - 1) as f64);
    Ok(factor * population_variance(xs))
}

/// Monte-Carlo estimate of the partial-mean bias and variance.
#[derive(Debug, Clone)]
pub struct PartialMeanEstimate {
    /// || E[mean of t sampled] - mean of all ||, should tend to zero.
    pub mean_bias: f64,
    /// E || mean of t sampled - mean of all ||^2.
    pub var_est: f64,
    /// Standard error of `var_est` over the trials.
    pub var_se: f64,
}

pub fn partial_mean_variance_mc(
    xs: &[Vec<f64>],
    t: usize,
    trials: usize,
    rng: &mut SplitMix64,
) -> Result<PartialMeanEstimate> {
    let n = xs.len();
    if t == 0 || t > n {
        return Err(CoreError::InvalidParameter(format!(
            "partial sample size t = {t} out of range [1, {n}]"
        )));
    }
    if trials < 1000 {
        return Err(CoreError::InvalidParameter(
            "need at least 1000 trials for a meaningful estimate".to_string(),
        ));
    }
    let dim = xs[0].len();
    let mut full_mean = vec![0.0; dim];
    for x in xs {
        linalg::axpy(1.0, x, &mut full_mean);
    }
    for m in full_mean.iter_mut() {
        *m /= n as f64;
    }

    let mut idx: Vec<usize> = (0..n).collect();
    let mut mean_acc = vec![0.0; dim];
    let mut sq_sum = 0.0;
    let mut sq_sq_sum = 0.0;
    let mut partial = vec![0.0; dim];
    for _ in 0..trials {
        // partial Fisher-Yates: first t entries are a uniform sample
        for i in 0..t.min(n - 1) {
            let j = i + rng.next_usize(n - i);
            idx.swap(i, j);
        }
        partial.iter_mut().for_each(|p| *p = 0.0);
        for &i in &idx[..t] {
            linalg::axpy(1.0, &xs[i], &mut partial);
        }
        for p in partial.iter_mut() {
            *p /= t as f64;
        }
        linalg::axpy(1.0, &partial, &mut mean_acc);
        let sq = linalg::dist_sq(&partial, &full_mean);
        sq_sum += sq;
        sq_sq_sum += sq * sq;
    }
    for m in mean_acc.iter_mut() {
        *m /= trials as f64;
    }
    let var_est = sq_sum / trials as f64;
    let var_of_sq = (sq_sq_sum / trials as f64 - var_est * var_est).max(0.0);
    Ok(PartialMeanEstimate {
        mean_bias: linalg::dist(&mean_acc, &full_mean),
        var_est,
        var_se: (var_of_sq / trials as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalars(vals: &[f64]) -> Vec<Vec<f64>> {
        vals.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn single_element_stream() {
        let mut s = PermutationStream::new(1, ShuffleMode::IndependentPerEpoch, 9);
        assert_eq!(s.next_permutation(), vec![0]);
        assert_eq!(s.next_permutation(), vec![0]);
    }

    #[test]
    fn fixed_mode_is_identity() {
        let mut s = PermutationStream::new(4, ShuffleMode::FixedIncremental, 1);
        for _ in 0..3 {
            assert_eq!(s.next_permutation(), vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn shuffle_once_repeats_first_draw() {
        let mut s = PermutationStream::new(6, ShuffleMode::ShuffleOnce, 123);
        let first = s.next_permutation();
        for _ in 0..5 {
            assert_eq!(s.next_permutation(), first);
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = PermutationStream::new(7, ShuffleMode::IndependentPerEpoch, 42);
        let mut b = PermutationStream::new(7, ShuffleMode::IndependentPerEpoch, 42);
        for _ in 0..20 {
            assert_eq!(a.next_permutation(), b.next_permutation());
        }
    }

    #[test]
    fn epoch_addressing_matches_stream_order() {
        let mut s = PermutationStream::new(5, ShuffleMode::IndependentPerEpoch, 77);
        let probe = s.clone();
        for epoch in 1..=10u64 {
            assert_eq!(s.next_permutation(), probe.permutation_for_epoch(epoch));
        }
    }

    #[test]
    fn permutations_are_bijections() {
        let mut s = PermutationStream::new(9, ShuffleMode::IndependentPerEpoch, 3);
        for _ in 0..50 {
            let mut p = s.next_permutation();
            p.sort_unstable();
            assert_eq!(p, (0..9).collect::<Vec<_>>());
        }
    }

    #[test]
    fn chi_square_uniformity_n3() {
        // 6 possible permutations of [3]; 60000 draws
        let mut s = PermutationStream::new(3, ShuffleMode::IndependentPerEpoch, 2024);
        let mut counts = [0usize; 6];
        let draws = 60_000;
        for _ in 0..draws {
            let p = s.next_permutation();
            let code = p[0] * 2 + usize::from(p[1] > p[2]);
            counts[code] += 1;
        }
        let expected = draws as f64 / 6.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square with 5 dof: p > 0.001 iff chi2 < 20.515
        assert!(chi2 < 20.515, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn partial_variance_two_points() {
        // X = {1, -1}, t = 1: partial means are +-1, variance 1
        let xs = scalars(&[1.0, -1.0]);
        assert_eq!(expected_partial_variance(&xs, 1).unwrap(), 1.0);
    }

    #[test]
    fn partial_variance_full_sample_is_zero() {
        let xs = scalars(&[2.0, 5.0, -1.0]);
        assert_eq!(expected_partial_variance(&xs, 3).unwrap(), 0.0);
    }

    #[test]
    fn partial_variance_three_points() {
        // sigma^2 = 2/3, factor (3-1)/(1*2) = 1
        let xs = scalars(&[1.0, 2.0, 3.0]);
        let v = expected_partial_variance(&xs, 1).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn partial_variance_rejects_bad_t() {
        let xs = scalars(&[1.0, 2.0]);
        assert!(expected_partial_variance(&xs, 0).is_err());
        assert!(expected_partial_variance(&xs, 3).is_err());
    }

    #[test]
    fn mc_matches_closed_form_two_points() {
        let xs = scalars(&[1.0, -1.0]);
        let mut rng = SplitMix64::new(5);
        let est = partial_mean_variance_mc(&xs, 1, 100_000, &mut rng).unwrap();
        assert!((est.var_est - 1.0).abs() <= 3.0 * est.var_se.max(1e-12), "{est:?}");
    }

    #[test]
    fn mc_exact_zero_at_full_sample() {
        let xs = scalars(&[1.0, 2.0, 3.0]);
        let mut rng = SplitMix64::new(6);
        let est = partial_mean_variance_mc(&xs, 3, 1000, &mut rng).unwrap();
        assert_eq!(est.var_est, 0.0);
        assert_eq!(est.mean_bias, 0.0);
    }

    #[test]
    fn mc_three_points_t2() {
        // closed form: ((3-2)/(2*2)) * (2/3) = 1/6
        let xs = scalars(&[1.0, 2.0, 3.0]);
        let mut rng = SplitMix64::new(7);
        let est = partial_mean_variance_mc(&xs, 2, 100_000, &mut rng).unwrap();
        assert!((est.var_est - 1.0 / 6.0).abs() <= 3.0 * est.var_se, "{est:?}");
    }
}
