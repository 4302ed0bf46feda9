//! Small dense-vector helpers shared by the solvers and measures.
//!
//! Summation is always index-ascending; [`sum_compensated`] switches to
//! Neumaier compensation for long sums so that traces are bit-reproducible
//! regardless of problem size.

/// Threshold above which sums use Neumaier compensation.
pub const COMPENSATION_THRESHOLD: usize = 1000;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// y += alpha * x
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Index-ascending sum with Neumaier compensation.
pub fn sum_compensated(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Accumulates dense vectors index-ascending; compensated when the term
/// count reaches [`COMPENSATION_THRESHOLD`].
pub struct VecAccumulator {
    sum: Vec<f64>,
    comp: Option<Vec<f64>>,
    count: usize,
}

impl VecAccumulator {
    pub fn new(dim: usize, expected_terms: usize) -> Self {
        let comp = (expected_terms >= COMPENSATION_THRESHOLD).then(|| vec![0.0; dim]);
        VecAccumulator { sum: vec![0.0; dim], comp, count: 0 }
    }

    pub fn add(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.sum.len());
        self.count += 1;
        match &mut self.comp {
            None => {
                for (s, x) in self.sum.iter_mut().zip(v) {
                    *s += x;
                }
            }
            Some(comp) => {
                for ((s, c), &x) in self.sum.iter_mut().zip(comp.iter_mut()).zip(v) {
                    let t = *s + x;
                    if s.abs() >= x.abs() {
                        *c += (*s - t) + x;
                    } else {
                        *c += (x - t) + *s;
                    }
                    *s = t;
                }
            }
        }
    }

    /// Final mean over the accumulated terms.
    pub fn into_mean(self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        match self.comp {
            None => self.sum.into_iter().map(|s| s / n).collect(),
            Some(comp) => self
                .sum
                .into_iter()
                .zip(comp)
                .map(|(s, c)| (s + c) / n)
                .collect(),
        }
    }
}

/// Scalar accumulator with the same compensation policy.
pub struct ScalarAccumulator {
    sum: f64,
    comp: f64,
    compensate: bool,
    count: usize,
}

impl ScalarAccumulator {
    pub fn new(expected_terms: usize) -> Self {
        ScalarAccumulator {
            sum: 0.0,
            comp: 0.0,
            compensate: expected_terms >= COMPENSATION_THRESHOLD,
            count: 0,
        }
    }

    pub fn add(&mut self, v: f64) {
        self.count += 1;
        if self.compensate {
            let t = self.sum + v;
            if self.sum.abs() >= v.abs() {
                self.comp += (self.sum - t) + v;
            } else {
                self.comp += (v - t) + self.sum;
            }
            self.sum = t;
        } else {
            self.sum += v;
        }
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.count.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        // 1 + 1e16 - 1e16 in plain f64 loses the 1.
        let vals = [1.0, 1e16, -1e16];
        assert_eq!(sum_compensated(vals.iter().copied()), 1.0);
    }

    #[test]
    fn accumulator_mean_matches_plain_for_short_sums() {
        let mut acc = VecAccumulator::new(2, 3);
        acc.add(&[1.0, 2.0]);
        acc.add(&[3.0, 4.0]);
        acc.add(&[5.0, 6.0]);
        assert_eq!(acc.into_mean(), vec![3.0, 4.0]);
    }

    #[test]
    fn axpy_and_dot() {
        let mut y = vec![1.0, 1.0];
        axpy(2.0, &[3.0, -1.0], &mut y);
        assert_eq!(y, vec![7.0, -1.0]);
        assert_eq!(dot(&y, &[1.0, 1.0]), 6.0);
    }
}
