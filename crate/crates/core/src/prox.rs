//! Regularizer library: nonsmooth terms phi with exact proximal operators,
//! weak-convexity moduli, and a brute-force grid oracle for validation.

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::rng::SplitMix64;

/// Nonsmooth part of the composite objective.
///
/// Every variant carries an exact closed-form prox; `rho` is the
/// weak-convexity modulus (phi + rho/2 ||.||^2 convex), and the prox is
/// single-valued only while step * rho < 1. Immutable, safe to share.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    /// phi = 0; prox is the identity.
    Zero,
    /// phi(w) = nu ||w||_1.
    L1 { nu: f64 },
    /// Indicator of the box [lo, hi]^d.
    Box { lo: f64, hi: f64 },
    /// Indicator of the nonnegative orthant.
    Nonneg,
    /// Indicator of the probability simplex { w >= 0, sum w = 1 }.
    Simplex,
    /// phi(w) = nu1 ||w||_1 + nu2 ||w||^2.
    ElasticNet { nu1: f64, nu2: f64 },
    /// Minimax concave penalty with strength nu and concavity gamma > 0;
    /// weakly convex with rho = 1/gamma.
    Mcp { nu: f64, gamma: f64 },
}

/// Membership tolerance for the simplex sum constraint.
const SIMPLEX_SUM_TOL: f64 = 1e-9;

impl Regularizer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Regularizer::Zero => "zero",
            Regularizer::L1 { .. } => "l1",
            Regularizer::Box { .. } => "box",
            Regularizer::Nonneg => "nonneg",
            Regularizer::Simplex => "simplex",
            Regularizer::ElasticNet { .. } => "elastic-net",
            Regularizer::Mcp { .. } => "mcp",
        }
    }

    /// Weak-convexity modulus.
    pub fn rho(&self) -> f64 {
        match self {
            Regularizer::Mcp { gamma, .. } => 1.0 / gamma,
            _ => 0.0,
        }
    }

    /// Uniform lower bound of phi.
    pub fn phi_lb(&self) -> f64 {
        0.0
    }

    pub fn is_convex(&self) -> bool {
        self.rho() == 0.0
    }

    /// True when prox reduces to a Euclidean projection.
    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            Regularizer::Box { .. } | Regularizer::Nonneg | Regularizer::Simplex
        )
    }

    pub fn in_domain(&self, w: &[f64]) -> bool {
        if !linalg::all_finite(w) {
            return false;
        }
        match self {
            Regularizer::Box { lo, hi } => w.iter().all(|&x| x >= *lo && x <= *hi),
            Regularizer::Nonneg => w.iter().all(|&x| x >= 0.0),
            Regularizer::Simplex => {
                w.iter().all(|&x| x >= 0.0)
                    && (w.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_SUM_TOL
            }
            _ => true,
        }
    }

    /// phi(w), +inf outside the domain.
    pub fn value(&self, w: &[f64]) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { nu } => nu * w.iter().map(|x| x.abs()).sum::<f64>(),
            Regularizer::ElasticNet { nu1, nu2 } => {
                nu1 * w.iter().map(|x| x.abs()).sum::<f64>() + nu2 * linalg::norm_sq(w)
            }
            Regularizer::Mcp { nu, gamma } => w
                .iter()
                .map(|&x| {
                    let a = x.abs();
                    if a <= gamma * nu {
                        nu * a - a * a / (2.0 * gamma)
                    } else {
                        gamma * nu * nu / 2.0
                    }
                })
                .sum(),
            Regularizer::Box { .. } | Regularizer::Nonneg | Regularizer::Simplex => {
                if self.in_domain(w) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn check_step(&self, step: f64) -> Result<()> {
        if !(step > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "prox step must be positive, got {step}"
            )));
        }
        if step * self.rho() >= 1.0 {
            return Err(CoreError::InvalidParameter(format!(
                "step * rho = {} >= 1: prox may be multivalued",
                step * self.rho()
            )));
        }
        Ok(())
    }

    /// prox_{step * phi}(z), written into `out`.
    pub fn prox_into(&self, z: &[f64], step: f64, out: &mut [f64]) -> Result<()> {
        self.check_step(step)?;
        if !linalg::all_finite(z) {
            return Err(CoreError::NonFiniteInput("prox argument".to_string()));
        }
        debug_assert_eq!(z.len(), out.len());
        match self {
            Regularizer::Zero => out.copy_from_slice(z),
            Regularizer::L1 { nu } => {
                let t = step * nu;
                for (o, &x) in out.iter_mut().zip(z) {
                    *o = soft_threshold(x, t);
                }
            }
            Regularizer::Box { lo, hi } => {
                for (o, &x) in out.iter_mut().zip(z) {
                    *o = x.clamp(*lo, *hi);
                }
            }
            Regularizer::Nonneg => {
                for (o, &x) in out.iter_mut().zip(z) {
                    *o = x.max(0.0);
                }
            }
            Regularizer::Simplex => project_simplex(z, out),
            Regularizer::ElasticNet { nu1, nu2 } => {
                // scaling of the soft threshold: argmin nu1|y| + nu2 y^2 + (z-y)^2/(2 step)
                let t = step * nu1;
                let scale = 1.0 / (1.0 + 2.0 * step * nu2);
                for (o, &x) in out.iter_mut().zip(z) {
                    *o = scale * soft_threshold(x, t);
                }
            }
            Regularizer::Mcp { nu, gamma } => {
                // firm threshold, valid while step < gamma
                let t = step * nu;
                let denom = 1.0 - step / gamma;
                for (o, &x) in out.iter_mut().zip(z) {
                    let a = x.abs();
                    *o = if a <= t {
                        0.0
                    } else if a <= gamma * nu {
                        x.signum() * (a - t) / denom
                    } else {
                        x
                    };
                }
            }
        }
        Ok(())
    }

    pub fn prox(&self, z: &[f64], step: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; z.len()];
        self.prox_into(z, step, &mut out)?;
        Ok(out)
    }
}

/// Soft threshold with the tie |z| = t mapped to 0.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Euclidean projection onto the probability simplex via sort-and-threshold,
/// O(d log d). The output is renormalized so the sum constraint holds to
/// machine precision.
fn project_simplex(z: &[f64], out: &mut [f64]) {
    let d = z.len();
    let mut sorted = z.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(z) {
        *o = (x - theta).max(0.0);
        sum += *o;
    }
    debug_assert!(sum > 0.0 || d == 0);
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Exhaustive grid minimization of phi(y) + ||z - y||^2 / (2 step) over
/// [z - radius, z + radius]^d intersected with dom(phi); validation oracle
/// for the closed-form proxes, d <= 2 only.
///
/// Axis ranges are clipped to box-type domains so boundary minimizers are
/// exact grid nodes. The simplex domain has empty interior in the product
/// grid, so it is searched along its own parametrization instead (d = 2:
/// y = (t, 1 - t), t in [0, 1]).
pub fn brute_force_prox(
    reg: &Regularizer,
    z: &[f64],
    step: f64,
    radius: f64,
    grid_points: usize,
) -> Result<Vec<f64>> {
    let d = z.len();
    if d > 2 {
        return Err(CoreError::UnsupportedDimension { dim: d, max: 2 });
    }
    if grid_points < 2 {
        return Err(CoreError::InvalidParameter("grid_points must be >= 2".to_string()));
    }
    if !(step > 0.0) || !(radius > 0.0) {
        return Err(CoreError::InvalidParameter("step and radius must be positive".to_string()));
    }

    let objective = |y: &[f64]| -> f64 {
        let phi = reg.value(y);
        if phi == f64::INFINITY {
            return f64::INFINITY;
        }
        phi + linalg::dist_sq(z, y) / (2.0 * step)
    };

    if let Regularizer::Simplex = reg {
        if d == 1 {
            // the 1-d simplex is the single point {1}
            return Ok(vec![1.0]);
        }
        let mut best = vec![0.0, 1.0];
        let mut best_val = f64::INFINITY;
        for k in 0..grid_points {
            let t = k as f64 / (grid_points - 1) as f64;
            let y = [t, 1.0 - t];
            let v = objective(&y);
            if v < best_val {
                best_val = v;
                best = y.to_vec();
            }
        }
        return Ok(best);
    }

    // per-axis ranges, clipped to box-type domains
    let axis_range = |zi: f64| -> (f64, f64) {
        let (mut lo, mut hi) = (zi - radius, zi + radius);
        match reg {
            Regularizer::Nonneg => {
                lo = lo.max(0.0);
                hi = hi.max(0.0);
            }
            Regularizer::Box { lo: bl, hi: bh } => {
                lo = lo.clamp(*bl, *bh);
                hi = hi.clamp(*bl, *bh);
            }
            _ => {}
        }
        (lo, hi)
    };

    let grid_1d = |zi: f64| -> Vec<f64> {
        let (lo, hi) = axis_range(zi);
        if hi <= lo {
            return vec![lo];
        }
        (0..grid_points)
            .map(|k| lo + (hi - lo) * k as f64 / (grid_points - 1) as f64)
            .collect()
    };

    let mut best = z.to_vec();
    let mut best_val = f64::INFINITY;
    match d {
        1 => {
            for y0 in grid_1d(z[0]) {
                let v = objective(&[y0]);
                if v < best_val {
                    best_val = v;
                    best = vec![y0];
                }
            }
        }
        2 => {
            let xs = grid_1d(z[0]);
            let ys = grid_1d(z[1]);
            for &y0 in &xs {
                for &y1 in &ys {
                    let v = objective(&[y0, y1]);
                    if v < best_val {
                        best_val = v;
                        best = vec![y0, y1];
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    if best_val == f64::INFINITY {
        return Err(CoreError::InvalidParameter(
            "no feasible grid node found".to_string(),
        ));
    }
    Ok(best)
}

/// Grid spacing used by `brute_force_prox` for the given call, for
/// tolerance bookkeeping in validation suites.
pub fn brute_force_grid_spacing(radius: f64, grid_points: usize) -> f64 {
    2.0 * radius / (grid_points - 1) as f64
}

/// Report of a sampled cocoercivity check.
#[derive(Debug)]
pub struct CocoercivityReport {
    pub samples: usize,
    /// (w, y, gap) for each violated pair.
    pub violations: Vec<(Vec<f64>, Vec<f64>, f64)>,
}

impl CocoercivityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples pairs (w, y) and checks (1 - step rho)-cocoercivity of the prox:
/// <w - y, P(w) - P(y)> >= (1 - step rho) ||P(w) - P(y)||^2 - 1e-9.
pub fn check_cocoercivity(
    reg: &Regularizer,
    step: f64,
    dim: usize,
    samples: usize,
    rng: &mut SplitMix64,
) -> Result<CocoercivityReport> {
    reg.check_step(step)?;
    let factor = 1.0 - step * reg.rho();
    let mut violations = Vec::new();
    for _ in 0..samples {
        let w: Vec<f64> = (0..dim).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let y: Vec<f64> = (0..dim).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let pw = reg.prox(&w, step)?;
        let py = reg.prox(&y, step)?;
        let diff_p: Vec<f64> = pw.iter().zip(&py).map(|(a, b)| a - b).collect();
        let diff_in: Vec<f64> = w.iter().zip(&y).map(|(a, b)| a - b).collect();
        let lhs = linalg::dot(&diff_in, &diff_p);
        let rhs = factor * linalg::norm_sq(&diff_p);
        if lhs < rhs - 1e-9 {
            violations.push((w, y, rhs - lhs));
        }
    }
    Ok(CocoercivityReport { samples, violations })
}
