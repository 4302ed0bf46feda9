//! Composite finite-sum problem model: psi(w) = f(w) + phi(w) with
//! f(w) = (1/n) sum_i f(w, i) exposed through per-component oracles.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::linalg::{self, ScalarAccumulator, VecAccumulator};
use crate::prox::Regularizer;
use crate::rng::SplitMix64;

/// Component value oracle: (w, i) -> f(w, i).
pub type ComponentValue = Arc<dyn Fn(&[f64], usize) -> Result<f64> + Send + Sync>;

/// Component gradient oracle, writing grad f(w, i) into `out`.
pub type ComponentGrad = Arc<dyn Fn(&[f64], usize, &mut [f64]) -> Result<()> + Send + Sync>;

/// Optional known solution of the composite problem, with whatever
/// metadata the constructor can certify.
#[derive(Debug, Clone)]
pub struct KnownSolution {
    pub point: Vec<f64>,
    pub psi_star: Option<f64>,
    pub sigma_star_sq: Option<f64>,
    pub mu: Option<f64>,
    /// All component gradients coincide at `point`.
    pub interpolating: bool,
}

/// Smooth finite-sum part of a composite problem.
///
/// Oracles must be pure and deterministic; instances are immutable after
/// construction and safe to share across concurrent runs.
#[derive(Clone)]
pub struct ProblemInstance {
    pub n: usize,
    pub dim: usize,
    value: ComponentValue,
    grad: ComponentGrad,
    /// Common Lipschitz modulus of all component gradients on dom(phi).
    /// `f64::INFINITY` marks problems with no global modulus; theory-tuned
    /// schedules are unavailable for those.
    pub lipschitz: f64,
    /// Uniform lower bound of every component value on dom(phi).
    pub f_lb: f64,
    pub known_solution: Option<KnownSolution>,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("n", &self.n)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("f_lb", &self.f_lb)
            .finish()
    }
}

impl ProblemInstance {
    pub fn new(
        n: usize,
        dim: usize,
        value: ComponentValue,
        grad: ComponentGrad,
        lipschitz: f64,
        f_lb: f64,
    ) -> Self {
        assert!(n > 0, "component count must be positive");
        assert!(dim > 0, "dimension must be positive");
        ProblemInstance { n, dim, value, grad, lipschitz, f_lb, known_solution: None }
    }

    pub fn with_known_solution(mut self, sol: KnownSolution) -> Self {
        self.known_solution = Some(sol);
        self
    }

    /// f(w, i), checked finite.
    pub fn component_value(&self, w: &[f64], i: usize) -> Result<f64> {
        let v = (self.value)(w, i)?;
        if !v.is_finite() {
            return Err(CoreError::DomainViolation {
                index: i,
                message: format!("component value is {v}"),
            });
        }
        Ok(v)
    }

    /// grad f(w, i) written into `out`, checked finite.
    pub fn component_grad_into(&self, w: &[f64], i: usize, out: &mut [f64]) -> Result<()> {
        (self.grad)(w, i, out)?;
        if !linalg::all_finite(out) {
            return Err(CoreError::DomainViolation {
                index: i,
                message: "component gradient is non-finite".to_string(),
            });
        }
        Ok(())
    }

    pub fn component_grad(&self, w: &[f64], i: usize) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.dim];
        self.component_grad_into(w, i, &mut g)?;
        Ok(g)
    }

    fn check_input(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim {
            return Err(CoreError::InvalidParameter(format!(
                "point has length {}, problem dimension is {}",
                w.len(),
                self.dim
            )));
        }
        if !linalg::all_finite(w) {
            return Err(CoreError::NonFiniteInput("evaluation point".to_string()));
        }
        Ok(())
    }

    /// f(w) = (1/n) sum_i f(w, i), index-ascending summation.
    pub fn eval_f(&self, w: &[f64]) -> Result<f64> {
        self.check_input(w)?;
        let mut acc = ScalarAccumulator::new(self.n);
        for i in 0..self.n {
            acc.add(self.component_value(w, i)?);
        }
        Ok(acc.mean())
    }

    /// Full gradient (1/n) sum_i grad f(w, i). Provided for diagnostics and
    /// the deterministic reference solver; stochastic solvers never call it
    /// inside their update loops.
    pub fn eval_full_grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_input(w)?;
        let mut acc = VecAccumulator::new(self.dim, self.n);
        let mut g = vec![0.0; self.dim];
        for i in 0..self.n {
            self.component_grad_into(w, i, &mut g)?;
            acc.add(&g);
        }
        Ok(acc.into_mean())
    }

    /// Population variance of the component gradients at `w`:
    /// (1/n) sum_i ||grad f(w,i) - grad f(w)||^2.
    ///
    /// Two-pass evaluation keeps the result nonnegative and exactly zero
    /// when all component gradients coincide.
    pub fn component_variance(&self, w: &[f64]) -> Result<f64> {
        self.check_input(w)?;
        if self.n == 1 {
            return Ok(0.0);
        }
        let mean = self.eval_full_grad(w)?;
        let mut acc = ScalarAccumulator::new(self.n);
        let mut g = vec![0.0; self.dim];
        for i in 0..self.n {
            self.component_grad_into(w, i, &mut g)?;
            acc.add(linalg::dist_sq(&g, &mean));
        }
        Ok(acc.mean())
    }

    /// Collapses the finite sum into a single component equal to the full
    /// objective; used by the n = 1 reduction tests.
    pub fn collapsed(&self) -> ProblemInstance {
        let p_val = self.clone();
        let p_grad = self.clone();
        ProblemInstance::new(
            1,
            self.dim,
            Arc::new(move |w, _| p_val.eval_f(w)),
            Arc::new(move |w, _, out: &mut [f64]| {
                let g = p_grad.eval_full_grad(w)?;
                out.copy_from_slice(&g);
                Ok(())
            }),
            self.lipschitz,
            self.f_lb,
        )
    }
}

/// Composite objective psi = f + phi.
#[derive(Clone, Debug)]
pub struct CompositeObjective {
    pub problem: ProblemInstance,
    pub regularizer: Regularizer,
}

impl CompositeObjective {
    pub fn new(problem: ProblemInstance, regularizer: Regularizer) -> Self {
        CompositeObjective { problem, regularizer }
    }

    /// psi(w) = f(w) + phi(w); +inf outside dom(phi).
    pub fn eval_psi(&self, w: &[f64]) -> Result<f64> {
        let phi = self.regularizer.value(w);
        if phi == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        Ok(self.problem.eval_f(w)? + phi)
    }

    /// Uniform lower bound psi_lb = f_lb + phi_lb.
    pub fn psi_lb(&self) -> f64 {
        self.problem.f_lb + self.regularizer.phi_lb()
    }
}

/// Outcome of one inequality evaluation at a point.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the variance bound sigma^2(w) <= 2 L [f(w) - f_lb] at `w`.
pub fn check_variance_bound(
    p: &ProblemInstance,
    reg: &Regularizer,
    w: &[f64],
) -> Result<BoundReport> {
    if !reg.in_domain(w) {
        return Err(CoreError::InvalidParameter(
            "variance bound is only meaningful on dom(phi)".to_string(),
        ));
    }
    let lhs = p.component_variance(w)?;
    let rhs = 2.0 * p.lipschitz * (p.eval_f(w)? - p.f_lb);
    Ok(BoundReport { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-9) })
}

/// Central finite-difference validation of the component gradients.
///
/// Samples `points` pairs (w, i) with w = prox(g, 1) of a Gaussian draw
/// (guaranteeing w in dom(phi)) and compares grad f(w, i) against a central
/// difference with step h = eps^(1/3) (1 + ||w||) per coordinate. Returns
/// the maximum relative deviation, with failures listed.
pub fn finite_difference_check(
    p: &ProblemInstance,
    reg: &Regularizer,
    points: usize,
    tol: f64,
    rng: &mut SplitMix64,
) -> Result<FiniteDiffReport> {
    let h_base = f64::EPSILON.powf(1.0 / 3.0);
    let mut max_rel = 0.0f64;
    let mut failures = Vec::new();
    for _ in 0..points {
        let draw: Vec<f64> = (0..p.dim).map(|_| rng.normal()).collect();
        let w = reg.prox(&draw, 1.0)?;
        let i = rng.next_usize(p.n);
        let grad = p.component_grad(&w, i)?;
        let h = h_base * (1.0 + linalg::norm(&w));
        let mut wp = w.clone();
        let mut wm = w.clone();
        for j in 0..p.dim {
            wp[j] = w[j] + h;
            wm[j] = w[j] - h;
            let fd = (p.component_value(&wp, i)? - p.component_value(&wm, i)?) / (2.0 * h);
            let rel = (fd - grad[j]).abs() / (1.0 + grad[j].abs());
            max_rel = max_rel.max(rel);
            if rel > tol {
                failures.push((w.clone(), i, j, rel));
            }
            wp[j] = w[j];
            wm[j] = w[j];
        }
    }
    Ok(FiniteDiffReport { max_relative_error: max_rel, failures })
}

#[derive(Debug)]
pub struct FiniteDiffReport {
    pub max_relative_error: f64,
    /// (point, component, coordinate, relative error) for each violation.
    pub failures: Vec<(Vec<f64>, usize, usize, f64)>,
}

impl FiniteDiffReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(dim: usize) -> ProblemInstance {
        // f(w, i) = 0.5 ||w||^2 for every i
        ProblemInstance::new(
            3,
            dim,
            Arc::new(|w, _| Ok(0.5 * linalg::norm_sq(w))),
            Arc::new(|w, _, out: &mut [f64]| {
                out.copy_from_slice(w);
                Ok(())
            }),
            1.0,
            0.0,
        )
    }

    fn two_scalars() -> ProblemInstance {
        // f(w, 0) = w, f(w, 1) = 3w on R
        ProblemInstance::new(
            2,
            1,
            Arc::new(|w: &[f64], i| Ok(if i == 0 { w[0] } else { 3.0 * w[0] })),
            Arc::new(|_w, i, out: &mut [f64]| {
                out[0] = if i == 0 { 1.0 } else { 3.0 };
                Ok(())
            }),
            0.0,
            -1e9,
        )
    }

    #[test]
    fn eval_f_quadratic_minimum() {
        let p = quadratic(2);
        assert_eq!(p.eval_f(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn eval_f_hand_average() {
        // mean of (1 + 3)/2 at w = 1
        let p = two_scalars();
        assert_eq!(p.eval_f(&[1.0]).unwrap(), 2.0);
    }

    #[test]
    fn full_grad_quadratic() {
        let p = quadratic(2);
        assert_eq!(p.eval_full_grad(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn full_grad_mean_of_scalars() {
        let p = two_scalars();
        assert_eq!(p.eval_full_grad(&[1.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn variance_two_scalars() {
        // grads {1, 3}: mean 2, deviations +-1 -> variance 1
        let p = two_scalars();
        assert_eq!(p.component_variance(&[0.3]).unwrap(), 1.0);
    }

    #[test]
    fn variance_single_component_is_zero() {
        let p = quadratic(2).collapsed();
        assert_eq!(p.component_variance(&[2.0, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn variance_identical_gradients_is_zero() {
        let p = quadratic(4);
        assert_eq!(p.component_variance(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn variance_moment_formula_agrees() {
        // one-pass moment formula vs the definitional two-pass
        let p = two_scalars();
        let w = [0.7];
        let g0 = p.component_grad(&w, 0).unwrap();
        let g1 = p.component_grad(&w, 1).unwrap();
        let mean_sq = ((g0[0] + g1[0]) / 2.0).powi(2);
        let moment = (g0[0] * g0[0] + g1[0] * g1[0]) / 2.0 - mean_sq;
        let twopass = p.component_variance(&w).unwrap();
        assert!((moment - twopass).abs() <= 1e-10 * twopass.max(1.0));
    }

    #[test]
    fn variance_bound_zero_at_flat_minimum() {
        let p = quadratic(2);
        let rep = check_variance_bound(&p, &Regularizer::Zero, &[0.0, 0.0]).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs, 0.0);
        assert!(rep.holds);
    }

    #[test]
    fn eval_f_rejects_wrong_length() {
        let p = quadratic(2);
        assert!(p.eval_f(&[1.0]).is_err());
    }

    #[test]
    fn eval_f_rejects_non_finite() {
        let p = quadratic(2);
        assert!(matches!(
            p.eval_f(&[f64::NAN, 0.0]),
            Err(CoreError::NonFiniteInput(_))
        ));
    }

    #[test]
    fn domain_violation_carries_index() {
        let p = ProblemInstance::new(
            3,
            1,
            Arc::new(|w: &[f64], i| if i == 2 { Ok(w[0].ln()) } else { Ok(w[0]) }),
            Arc::new(|_w, _i, out: &mut [f64]| {
                out[0] = 1.0;
                Ok(())
            }),
            1.0,
            -10.0,
        );
        match p.eval_f(&[-1.0]) {
            Err(CoreError::DomainViolation { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected domain violation, got {other:?}"),
        }
    }

    #[test]
    fn finite_difference_passes_on_quadratic() {
        let p = quadratic(3);
        let mut rng = SplitMix64::new(1);
        let rep = finite_difference_check(&p, &Regularizer::Zero, 20, 1e-6, &mut rng).unwrap();
        assert!(rep.passed(), "max rel err {}", rep.max_relative_error);
    }

    #[test]
    fn collapsed_matches_mean() {
        let p = two_scalars();
        let c = p.collapsed();
        assert_eq!(c.n, 1);
        assert_eq!(c.eval_f(&[1.0]).unwrap(), 2.0);
        assert_eq!(c.component_grad(&[1.0], 0).unwrap(), vec![2.0]);
    }
}
