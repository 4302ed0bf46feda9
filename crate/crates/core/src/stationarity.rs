//! Stationarity measures for the composite problem: the natural residual
//! G_lambda, the normal map F^nor, the merit function H_tau, and the
//! constants (C, tau, alpha_bar) driving the step-size theory.

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::problem::{BoundReport, CompositeObjective};
use crate::prox::Regularizer;

/// Constants derived from (L, rho, lambda):
///
/// * `c`         = 4 [(3L + 2/lambda - rho) / (1 - lambda rho)]^2
/// * `tau`       = (1 - 4 lambda rho) / (2 (1 - 2 lambda rho + lambda^2 L^2))
/// * `alpha_bar` = 1 / max{ sqrt(2 c), 10 L, 4 c lambda / tau }
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub c: f64,
    pub tau: f64,
    pub alpha_bar: f64,
    pub lambda: f64,
    pub lipschitz: f64,
    pub rho: f64,
}

/// Computes the theory constants; requires L > 0, rho >= 0 and
/// 0 < lambda < 1/(4 rho).
pub fn theory_constants(lipschitz: f64, rho: f64, lambda: f64) -> Result<TheoryConstants> {
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(CoreError::InvalidParameter(format!(
            "theory constants need a finite positive Lipschitz modulus, got {lipschitz}"
        )));
    }
    if rho < 0.0 {
        return Err(CoreError::InvalidParameter("rho must be nonnegative".to_string()));
    }
    if !(lambda > 0.0) {
        return Err(CoreError::InvalidParameter("lambda must be positive".to_string()));
    }
    if rho > 0.0 && lambda >= 1.0 / (4.0 * rho) {
        return Err(CoreError::InvalidParameter(format!(
            "lambda = {lambda} must be below 1/(4 rho) = {}",
            1.0 / (4.0 * rho)
        )));
    }
    let c = 4.0 * ((3.0 * lipschitz + 2.0 / lambda - rho) / (1.0 - lambda * rho)).powi(2);
    let tau = (1.0 - 4.0 * lambda * rho)
        / (2.0 * (1.0 - 2.0 * lambda * rho + lambda * lambda * lipschitz * lipschitz));
    let alpha_bar = 1.0
        / (2.0 * c)
            .sqrt()
            .max(10.0 * lipschitz)
            .max(4.0 * c * lambda / tau);
    Ok(TheoryConstants { c, tau, alpha_bar, lambda, lipschitz, rho })
}

/// Default proximal parameter: 1/L for convex phi, min{1/L, 1/(8 rho)}
/// otherwise (keeping a factor-two margin below the tau requirement).
pub fn default_lambda(lipschitz: f64, rho: f64) -> f64 {
    if rho > 0.0 {
        (1.0 / lipschitz).min(1.0 / (8.0 * rho))
    } else {
        1.0 / lipschitz
    }
}

fn check_lambda(reg: &Regularizer, lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(CoreError::InvalidParameter("lambda must be positive".to_string()));
    }
    if lambda * reg.rho() >= 1.0 {
        return Err(CoreError::InvalidParameter(format!(
            "lambda * rho = {} >= 1: prox may be multivalued",
            lambda * reg.rho()
        )));
    }
    Ok(())
}

/// Natural residual G_lambda(w) = (w - prox_{lambda phi}(w - lambda grad f(w))) / lambda.
pub fn natural_residual(obj: &CompositeObjective, w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_lambda(&obj.regularizer, lambda)?;
    let grad = obj.problem.eval_full_grad(w)?;
    let mut shifted = w.to_vec();
    linalg::axpy(-lambda, &grad, &mut shifted);
    let proxed = obj.regularizer.prox(&shifted, lambda)?;
    Ok(w.iter()
        .zip(&proxed)
        .map(|(wi, pi)| (wi - pi) / lambda)
        .collect())
}

/// Normal map evaluation: w = prox(z, lambda) and
/// F^nor(z) = grad f(w) + (z - w)/lambda, a member of the subdifferential
/// of psi at w.
#[derive(Debug, Clone)]
pub struct NormalMapEval {
    pub value: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn normal_map(obj: &CompositeObjective, z: &[f64], lambda: f64) -> Result<NormalMapEval> {
    check_lambda(&obj.regularizer, lambda)?;
    let w = obj.regularizer.prox(z, lambda)?;
    let mut value = obj.problem.eval_full_grad(&w)?;
    for (v, (zi, wi)) in value.iter_mut().zip(z.iter().zip(&w)) {
        *v += (zi - wi) / lambda;
    }
    Ok(NormalMapEval { value, w })
}

/// Merit function H_tau(z) = psi(prox(z, lambda)) + (tau lambda / 2) ||F^nor(z)||^2.
pub fn merit(obj: &CompositeObjective, z: &[f64], lambda: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(CoreError::InvalidParameter("tau must be positive".to_string()));
    }
    let nm = normal_map(obj, z, lambda)?;
    let psi = obj.eval_psi(&nm.w)?;
    Ok(psi + 0.5 * tau * lambda * linalg::norm_sq(&nm.value))
}

/// Checks the ordering (1 - lambda rho) ||G_lambda(prox(z))|| <= ||F^nor(z)||.
pub fn check_stat_inequality(
    obj: &CompositeObjective,
    z: &[f64],
    lambda: f64,
) -> Result<BoundReport> {
    let nm = normal_map(obj, z, lambda)?;
    let g = natural_residual(obj, &nm.w, lambda)?;
    let lhs = (1.0 - lambda * obj.regularizer.rho()) * linalg::norm(&g);
    let rhs = linalg::norm(&nm.value);
    Ok(BoundReport { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-9) })
}

/// Closed-form distance dist(0, d psi(w)) for separable regularizers
/// (l1, box, nonneg, zero); `None` where no closed form is implemented.
pub fn subdifferential_distance(
    obj: &CompositeObjective,
    w: &[f64],
) -> Result<Option<f64>> {
    let grad = obj.problem.eval_full_grad(w)?;
    let dist_sq: Option<f64> = match &obj.regularizer {
        Regularizer::Zero => Some(linalg::norm_sq(&grad)),
        Regularizer::L1 { nu } => Some(
            w.iter()
                .zip(&grad)
                .map(|(&wj, &gj)| {
                    if wj != 0.0 {
                        (gj + nu * wj.signum()).powi(2)
                    } else {
                        (gj.abs() - nu).max(0.0).powi(2)
                    }
                })
                .sum(),
        ),
        Regularizer::Nonneg => Some(
            w.iter()
                .zip(&grad)
                .map(|(&wj, &gj)| {
                    if wj > 0.0 {
                        gj * gj
                    } else {
                        // normal cone at the boundary is (-inf, 0]
                        (-gj).max(0.0).powi(2)
                    }
                })
                .sum(),
        ),
        Regularizer::Box { lo, hi } => Some(
            w.iter()
                .zip(&grad)
                .map(|(&wj, &gj)| {
                    if wj <= *lo {
                        (-gj).max(0.0).powi(2)
                    } else if wj >= *hi {
                        gj.max(0.0).powi(2)
                    } else {
                        gj * gj
                    }
                })
                .sum(),
        ),
        _ => None,
    };
    Ok(dist_sq.map(f64::sqrt))
}
