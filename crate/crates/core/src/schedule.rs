//! Per-epoch step-size rules.

use crate::error::{CoreError, Result};
use crate::stationarity::TheoryConstants;

/// Step-size rule; `step(k)` yields alpha_k for epoch k >= 1.
///
/// Conventions:
/// * constant:          alpha_k = alpha / n
/// * theory-constant-T: alpha_k = eta n^{1/3} / (T^{1/3} n), constant over
///   the horizon and clamped to the horizon value beyond it
/// * polynomial:        alpha_k = alpha / (beta + k)^gamma, divided by n
///   when `scale_by_n` is set
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    /// Component count of the problem the schedule is attached to.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    Constant { alpha: f64 },
    TheoryConstantT { eta: f64, horizon: usize },
    Polynomial { alpha: f64, beta: f64, gamma: f64, scale_by_n: bool },
}

impl Schedule {
    pub fn constant(alpha: f64, n: usize) -> Result<Schedule> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "constant schedule needs alpha > 0, got {alpha}"
            )));
        }
        Ok(Schedule { kind: ScheduleKind::Constant { alpha }, n })
    }

    pub fn polynomial(alpha: f64, beta: f64, gamma: f64, scale_by_n: bool, n: usize) -> Result<Schedule> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "polynomial schedule needs alpha > 0, got {alpha}"
            )));
        }
        if beta < 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "polynomial schedule needs beta >= 0, got {beta}"
            )));
        }
        if !(gamma > 1.0 / 3.0 && gamma <= 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "polynomial schedule needs gamma in (1/3, 1], got {gamma}"
            )));
        }
        Ok(Schedule { kind: ScheduleKind::Polynomial { alpha, beta, gamma, scale_by_n }, n })
    }

    /// Theory-tuned constant schedule for a fixed epoch horizon:
    /// eta = min{(2 L C)^{-1/3}, alpha_bar n^{-1/3} T^{1/3}}.
    pub fn theory_constant(tc: &TheoryConstants, n: usize, horizon: usize) -> Result<Schedule> {
        if horizon == 0 {
            return Err(CoreError::InvalidParameter("horizon must be positive".to_string()));
        }
        let t = horizon as f64;
        let nf = n as f64;
        let eta = (2.0 * tc.lipschitz * tc.c)
            .powf(-1.0 / 3.0)
            .min(tc.alpha_bar * nf.powf(-1.0 / 3.0) * t.powf(1.0 / 3.0));
        Schedule::theory_constant_eta(eta, tc, n, horizon)
    }

    /// Same as [`Schedule::theory_constant`] with an explicit eta. The
    /// complexity guarantees need eta within the admissible cap that
    /// [`Schedule::theory_constant`] computes; larger values still define a
    /// valid schedule, and the trace checkers gate their own preconditions.
    pub fn theory_constant_eta(
        eta: f64,
        _tc: &TheoryConstants,
        n: usize,
        horizon: usize,
    ) -> Result<Schedule> {
        if horizon == 0 {
            return Err(CoreError::InvalidParameter("horizon must be positive".to_string()));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "theory-constant schedule needs eta > 0, got {eta}"
            )));
        }
        Ok(Schedule { kind: ScheduleKind::TheoryConstantT { eta, horizon }, n })
    }

    /// alpha_k for epoch k (1-based).
    pub fn step_size(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        let nf = self.n as f64;
        match &self.kind {
            ScheduleKind::Constant { alpha } => alpha / nf,
            ScheduleKind::TheoryConstantT { eta, horizon } => {
                // constant over the horizon; requests past it clamp to the
                // horizon value (which is the same constant)
                let t = (*horizon as f64).powf(1.0 / 3.0);
                eta * nf.powf(1.0 / 3.0) / (t * nf)
            }
            ScheduleKind::Polynomial { alpha, beta, gamma, scale_by_n } => {
                let base = alpha / (beta + k as f64).powf(*gamma);
                if *scale_by_n {
                    base / nf
                } else {
                    base
                }
            }
        }
    }

    /// Largest alpha_k over the first `epochs` epochs.
    pub fn max_step(&self, epochs: usize) -> f64 {
        match &self.kind {
            ScheduleKind::Constant { .. } | ScheduleKind::TheoryConstantT { .. } => {
                self.step_size(1)
            }
            ScheduleKind::Polynomial { .. } => {
                // decreasing in k
                let _ = epochs;
                self.step_size(1)
            }
        }
    }

    /// Short identifier used in CSV output.
    pub fn id(&self) -> String {
        match &self.kind {
            ScheduleKind::Constant { alpha } => format!("const-a{alpha}"),
            ScheduleKind::TheoryConstantT { eta, horizon } => {
                format!("theory-T{horizon}-eta{eta:.3e}")
            }
            ScheduleKind::Polynomial { alpha, beta, gamma, scale_by_n } => {
                let n_tag = if *scale_by_n { "-ndiv" } else { "" };
                format!("poly-a{alpha}-b{beta}-g{gamma}{n_tag}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationarity::theory_constants;

    #[test]
    fn polynomial_one_over_k() {
        let s = Schedule::polynomial(1.0, 0.0, 1.0, false, 10).unwrap();
        assert_eq!(s.step_size(4), 0.25);
        assert_eq!(s.step_size(1), 1.0);
    }

    #[test]
    fn constant_divides_by_n() {
        let s = Schedule::constant(0.5, 5).unwrap();
        for k in 1..100 {
            assert_eq!(s.step_size(k), 0.1);
        }
    }

    #[test]
    fn theory_constant_worked_example() {
        // L = 1, rho = 0, lambda = 1 -> C = 100; n = 8, T = 1000,
        // eta = (2 L C)^{-1/3} -> alpha_k = eta * 2 / 10 / 8
        let tc = theory_constants(1.0, 0.0, 1.0).unwrap();
        let eta = (2.0 * 100.0f64).powf(-1.0 / 3.0);
        let s = Schedule::theory_constant_eta(eta, &tc, 8, 1000).unwrap();
        let expected = eta * 2.0 / 10.0 / 8.0;
        assert!((s.step_size(1) - expected).abs() < 1e-15);
        // clamped past the horizon
        assert_eq!(s.step_size(5000), s.step_size(1));
    }

    #[test]
    fn theory_constant_picks_admissible_eta() {
        let tc = theory_constants(1.0, 0.0, 1.0).unwrap();
        let s = Schedule::theory_constant(&tc, 8, 1000).unwrap();
        match s.kind {
            ScheduleKind::TheoryConstantT { eta, .. } => {
                let cap_a = (2.0 * 100.0f64).powf(-1.0 / 3.0);
                let cap_b = tc.alpha_bar * 8f64.powf(-1.0 / 3.0) * 1000f64.powf(1.0 / 3.0);
                assert!((eta - cap_a.min(cap_b)).abs() < 1e-15);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn gamma_outside_range_rejected() {
        assert!(Schedule::polynomial(1.0, 0.0, 0.2, false, 4).is_err());
        assert!(Schedule::polynomial(1.0, 0.0, 1.2, false, 4).is_err());
        assert!(Schedule::polynomial(1.0, 0.0, 1.0, false, 4).is_ok());
        assert!(Schedule::polynomial(1.0, 0.0, 0.34, false, 4).is_ok());
    }
}
