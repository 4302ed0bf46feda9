//! Post-hoc verification of the descent and error estimates along recorded
//! traces, plus empirical rate probes.

use crate::error::{CoreError, Result};
use crate::solvers::Trace;
use crate::stationarity::TheoryConstants;

/// Outcome of one inequality checked along a trace.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub name: String,
    pub epochs_checked: usize,
    /// (epoch, lhs, rhs) for each violated epoch.
    pub violations: Vec<(usize, f64, f64)>,
    pub max_relative_violation: f64,
    pub holds: bool,
    /// Set when the trace does not satisfy the estimate's preconditions or
    /// lacks the required fields; `holds` is vacuous in that case.
    pub not_applicable: Option<String>,
}

impl InequalityReport {
    fn applicable(name: &str, epochs: usize, violations: Vec<(usize, f64, f64)>) -> Self {
        let max_rel = violations
            .iter()
            .map(|(_, lhs, rhs)| (lhs - rhs) / rhs.abs().max(1e-300))
            .fold(0.0f64, f64::max);
        InequalityReport {
            name: name.to_string(),
            epochs_checked: epochs,
            holds: violations.is_empty(),
            violations,
            max_relative_violation: max_rel,
            not_applicable: None,
        }
    }

    fn skipped(name: &str, reason: impl Into<String>) -> Self {
        InequalityReport {
            name: name.to_string(),
            epochs_checked: 0,
            violations: Vec::new(),
            max_relative_violation: 0.0,
            holds: true,
            not_applicable: Some(reason.into()),
        }
    }

    pub fn is_applicable(&self) -> bool {
        self.not_applicable.is_none()
    }
}

/// Relative slack for products of traced quantities.
const REL_SLACK: f64 = 1e-6;
/// Absolute slack for the merit-descent estimate.
const MERIT_SLACK: f64 = 1e-8;

/// Per-epoch error bound
/// ||e^k||^2 <= C n^4 alpha_k^4 (||F^nor(z^k)||^2 + sigma_k^2),
/// valid while alpha_k <= 1 / (sqrt(2 C) n).
pub fn check_error_bound(trace: &Trace, tc: &TheoryConstants) -> InequalityReport {
    const NAME: &str = "error-bound";
    let n = trace.n as f64;
    let step_cap = 1.0 / ((2.0 * tc.c).sqrt() * n);
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for r in &trace.records {
        let (err, fnor, sigma) = match (r.err_norm, r.fnor_norm, r.sigma_sq) {
            (Some(e), Some(f), Some(s)) => (e, f, s),
            _ => return InequalityReport::skipped(NAME, "trace lacks e^k / F^nor / sigma^2 records"),
        };
        if r.step_size > step_cap * (1.0 + 1e-12) {
            return InequalityReport::skipped(
                NAME,
                format!("alpha_{} = {} exceeds 1/(sqrt(2C) n) = {step_cap}", r.epoch, r.step_size),
            );
        }
        checked += 1;
        let lhs = err * err;
        let rhs = tc.c * n.powi(4) * r.step_size.powi(4) * (fnor * fnor + sigma);
        if lhs > rhs * (1.0 + REL_SLACK) {
            violations.push((r.epoch, lhs, rhs));
        }
    }
    InequalityReport::applicable(NAME, checked, violations)
}

/// Merit descent
/// H(z^{k+1}) <= H(z^k) - (tau n a_k / 4) ||F^nor(z^k)||^2
///               - ||w^{k+1} - w^k||^2 / (8 n a_k) + C n^3 a_k^3 sigma_k^2,
/// valid while lambda < 1/(4 rho) and alpha_k <= alpha_bar / n.
pub fn check_merit_descent(trace: &Trace, tc: &TheoryConstants) -> InequalityReport {
    const NAME: &str = "merit-descent";
    let n = trace.n as f64;
    if tc.rho > 0.0 && trace.lambda >= 1.0 / (4.0 * tc.rho) {
        return InequalityReport::skipped(NAME, "lambda >= 1/(4 rho)");
    }
    let step_cap = tc.alpha_bar / n;
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for k in 0..trace.records.len() {
        let r = &trace.records[k];
        let next_merit = if k + 1 < trace.records.len() {
            trace.records[k + 1].merit
        } else {
            trace.final_merit
        };
        let (h_k, h_next, fnor, sigma, w_step) = match (r.merit, next_merit, r.fnor_norm, r.sigma_sq, r.w_step_norm) {
            (Some(a), Some(b), Some(c), Some(d), Some(e)) => (a, b, c, d, e),
            _ => return InequalityReport::skipped(NAME, "trace lacks merit / F^nor / sigma^2 records"),
        };
        if r.step_size > step_cap * (1.0 + 1e-12) {
            return InequalityReport::skipped(
                NAME,
                format!("alpha_{} = {} exceeds alpha_bar/n = {step_cap}", r.epoch, r.step_size),
            );
        }
        checked += 1;
        let a = r.step_size;
        let rhs = h_k - 0.25 * tc.tau * n * a * fnor * fnor - w_step * w_step / (8.0 * n * a)
            + tc.c * n.powi(3) * a.powi(3) * sigma
            + MERIT_SLACK;
        if h_next > rhs {
            violations.push((r.epoch, h_next, rhs));
        }
    }
    InequalityReport::applicable(NAME, checked, violations)
}

/// Prefix complexity bound: for every prefix T of the trace,
/// min_{k<=T} ||F^nor(z^k)||^2
///   <= (4 + 24 L C sum_{k<=T} eta_k^3) / (tau sum_{k<=T} eta_k) (H(z^1) - psi_lb),
/// with eta_k = n alpha_k, valid while eta_k <= alpha_bar and
/// sum eta_k^3 <= 1/(2 L C).
pub fn check_complexity_bound(
    trace: &Trace,
    tc: &TheoryConstants,
    psi_lb: f64,
) -> InequalityReport {
    const NAME: &str = "complexity-prefix";
    let n = trace.n as f64;
    let h1 = match trace.records.first().and_then(|r| r.merit) {
        Some(h) => h,
        None => return InequalityReport::skipped(NAME, "trace lacks merit records"),
    };
    let gap = h1 - psi_lb;
    let mut eta_sum = 0.0;
    let mut eta_cubed_sum = 0.0;
    let mut running_min = f64::INFINITY;
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for r in &trace.records {
        let fnor = match r.fnor_norm {
            Some(f) => f,
            None => return InequalityReport::skipped(NAME, "trace lacks F^nor records"),
        };
        let eta = n * r.step_size;
        if eta > tc.alpha_bar * (1.0 + 1e-12) {
            return InequalityReport::skipped(
                NAME,
                format!("eta_{} = {eta} exceeds alpha_bar = {}", r.epoch, tc.alpha_bar),
            );
        }
        eta_sum += eta;
        eta_cubed_sum += eta * eta * eta;
        if eta_cubed_sum > 1.0 / (2.0 * tc.lipschitz * tc.c) * (1.0 + 1e-12) {
            return InequalityReport::skipped(
                NAME,
                format!("sum of eta^3 exceeds 1/(2 L C) at epoch {}", r.epoch),
            );
        }
        checked += 1;
        running_min = running_min.min(fnor * fnor);
        let rhs = (4.0 + 24.0 * tc.lipschitz * tc.c * eta_cubed_sum) / (tc.tau * eta_sum) * gap;
        if running_min > rhs * (1.0 + REL_SLACK) {
            violations.push((r.epoch, running_min, rhs));
        }
    }
    InequalityReport::applicable(NAME, checked, violations)
}

/// Variance bound along the trace: sigma_k^2 <= 2 L (f(w^k) - f_lb).
pub fn check_variance_bound_trace(
    trace: &Trace,
    lipschitz: f64,
    f_lb: f64,
) -> InequalityReport {
    const NAME: &str = "variance-bound";
    if !lipschitz.is_finite() {
        return InequalityReport::skipped(NAME, "no finite Lipschitz modulus");
    }
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for r in &trace.records {
        let (sigma, f_start) = match (r.sigma_sq, r.f_start) {
            (Some(s), Some(f)) => (s, f),
            _ => return InequalityReport::skipped(NAME, "trace lacks sigma^2 / f(w^k) records"),
        };
        checked += 1;
        let rhs = 2.0 * lipschitz * (f_start - f_lb);
        if sigma > rhs * (1.0 + 1e-9) {
            violations.push((r.epoch, sigma, rhs));
        }
    }
    InequalityReport::applicable(NAME, checked, violations)
}

/// Stationarity-measure ordering along the trace:
/// (1 - lambda rho) ||G_lambda(w^k)|| <= ||F^nor(z^k)||.
pub fn check_stat_ordering_trace(trace: &Trace, rho: f64) -> InequalityReport {
    const NAME: &str = "stat-ordering";
    let factor = 1.0 - trace.lambda * rho;
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for r in &trace.records {
        let (g, f) = match (r.nat_res_lambda, r.fnor_norm) {
            (Some(g), Some(f)) => (g, f),
            _ => return InequalityReport::skipped(NAME, "trace lacks G_lambda / F^nor records"),
        };
        checked += 1;
        let lhs = factor * g;
        if lhs > f * (1.0 + 1e-9) {
            violations.push((r.epoch, lhs, f));
        }
    }
    InequalityReport::applicable(NAME, checked, violations)
}

/// Least-squares slope of log y against log k over the trailing `window`
/// fraction of the series. Nonpositive values are dropped (counted in the
/// report); fewer than 10 surviving points is an error.
pub fn fit_rate(series: &[(f64, f64)], window: f64) -> Result<RateFit> {
    fit_loglog(series, window)
}

#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of the fitted line.
    pub correlation: f64,
    pub points_used: usize,
    pub points_dropped: usize,
}

fn fit_loglog(series: &[(f64, f64)], window: f64) -> Result<RateFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(CoreError::InvalidParameter("window must be in (0, 1]".to_string()));
    }
    let start = series.len() - (series.len() as f64 * window).ceil() as usize;
    let tail = &series[start..];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0usize;
    for &(k, y) in tail {
        if y > 0.0 && k > 0.0 {
            xs.push(k.ln());
            ys.push(y.ln());
        } else {
            dropped += 1;
        }
    }
    if xs.len() < 10 {
        return Err(CoreError::InsufficientData(format!(
            "only {} positive points in the fit window",
            xs.len()
        )));
    }
    Ok(least_squares(&xs, &ys, dropped))
}

/// Least-squares slope of log y against k (not log k): probes geometric
/// decay y ~ r^k; the reported correlation quantifies log-linearity.
pub fn fit_geometric(series: &[(f64, f64)], window: f64) -> Result<RateFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(CoreError::InvalidParameter("window must be in (0, 1]".to_string()));
    }
    let start = series.len() - (series.len() as f64 * window).ceil() as usize;
    let tail = &series[start..];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0usize;
    for &(k, y) in tail {
        if y > 0.0 {
            xs.push(k);
            ys.push(y.ln());
        } else {
            dropped += 1;
        }
    }
    if xs.len() < 10 {
        return Err(CoreError::InsufficientData(format!(
            "only {} positive points in the fit window",
            xs.len()
        )));
    }
    Ok(least_squares(&xs, &ys, dropped))
}

fn least_squares(xs: &[f64], ys: &[f64], dropped: usize) -> RateFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let corr = if syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 1.0 };
    RateFit {
        slope,
        intercept: my - slope * mx,
        correlation: corr,
        points_used: xs.len(),
        points_dropped: dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_series(exponent: f64, count: usize) -> Vec<(f64, f64)> {
        (1..=count)
            .map(|k| (k as f64, (k as f64).powf(exponent)))
            .collect()
    }

    #[test]
    fn exact_power_law_slope() {
        let fit = fit_rate(&power_series(-2.0, 100), 0.5).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-9, "{}", fit.slope);
    }

    #[test]
    fn scaled_power_law_slope() {
        let series: Vec<(f64, f64)> = (1..=100)
            .map(|k| (k as f64, 5.0 / k as f64))
            .collect();
        let fit = fit_rate(&series, 0.5).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-9);
    }

    #[test]
    fn perturbed_power_law_slope() {
        let series: Vec<(f64, f64)> = (1..=500)
            .map(|k| {
                let kf = k as f64;
                (kf, kf.powf(-2.0 / 3.0) * (1.0 + 0.01 * kf.sin()))
            })
            .collect();
        let fit = fit_rate(&series, 0.5).unwrap();
        assert!((fit.slope + 2.0 / 3.0).abs() < 0.05, "{}", fit.slope);
    }

    #[test]
    fn scaling_changes_intercept_not_slope() {
        let base = power_series(-1.5, 80);
        let scaled: Vec<(f64, f64)> = base.iter().map(|&(k, y)| (k, 7.3 * y)).collect();
        let f1 = fit_rate(&base, 0.6).unwrap();
        let f2 = fit_rate(&scaled, 0.6).unwrap();
        assert!((f1.slope - f2.slope).abs() < 1e-12);
        assert!((f2.intercept - f1.intercept - 7.3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_values_filtered() {
        let mut series = power_series(-1.0, 40);
        series[5].1 = 0.0;
        series[7].1 = -2.0;
        let fit = fit_rate(&series, 1.0).unwrap();
        assert_eq!(fit.points_dropped, 2);
        assert!((fit.slope + 1.0).abs() < 0.05);
    }

    #[test]
    fn too_few_points_is_error() {
        let series = power_series(-1.0, 8);
        assert!(matches!(
            fit_rate(&series, 1.0),
            Err(CoreError::InsufficientData(_))
        ));
    }

    #[test]
    fn geometric_fit_recovers_ratio() {
        let series: Vec<(f64, f64)> = (1..=60)
            .map(|k| (k as f64, 3.0 * 0.8f64.powi(k)))
            .collect();
        let fit = fit_geometric(&series, 1.0).unwrap();
        assert!((fit.slope - 0.8f64.ln()).abs() < 1e-9);
        assert!(fit.correlation < -0.999);
    }
}
