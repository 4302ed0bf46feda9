//! `check` subcommand: run the grid with theory diagnostics on and verify
//! the descent and error estimates along every applicable trace.

use std::fs;
use std::path::Path;

use normprr_core::diagnostics::{
    check_complexity_bound, check_error_bound, check_merit_descent, check_stat_ordering_trace,
    check_variance_bound_trace, InequalityReport,
};
use normprr_core::solvers::Algorithm;
use normprr_core::stationarity::theory_constants;

use crate::runner::{GridResult, HarnessError};

type Result<T> = std::result::Result<T, HarnessError>;

pub struct CheckOutcome {
    pub reports: Vec<(String, InequalityReport)>,
    pub violations: usize,
    pub applicable: usize,
    pub skipped: usize,
}

/// Runs every checker on every norm-PRR trace of the grid. Traces whose
/// schedules or problems fall outside an estimate's preconditions yield
/// not-applicable reports, which are recorded but not counted as
/// violations.
pub fn check_grid(grid: &GridResult) -> CheckOutcome {
    let mut reports = Vec::new();
    let rho = grid.bundle.objective.regularizer.rho();
    let lipschitz = grid.bundle.lipschitz();
    let f_lb = grid.bundle.objective.problem.f_lb;
    let psi_lb = grid.bundle.objective.psi_lb();

    for (key, trace) in &grid.runs {
        if key.algorithm != Algorithm::NormPrr {
            continue;
        }
        let mut batch: Vec<InequalityReport> = Vec::new();
        match theory_constants(lipschitz, rho, grid.lambda) {
            Ok(tc) => {
                batch.push(check_error_bound(trace, &tc));
                batch.push(check_merit_descent(trace, &tc));
                batch.push(check_complexity_bound(trace, &tc, psi_lb));
            }
            Err(e) => {
                for name in ["error-bound", "merit-descent", "complexity-prefix"] {
                    batch.push(InequalityReport {
                        name: name.to_string(),
                        epochs_checked: 0,
                        violations: Vec::new(),
                        max_relative_violation: 0.0,
                        holds: true,
                        not_applicable: Some(format!("no theory constants: {e}")),
                    });
                }
            }
        }
        batch.push(check_variance_bound_trace(trace, lipschitz, f_lb));
        batch.push(check_stat_ordering_trace(trace, rho));
        for rep in batch {
            reports.push((key.run_id.clone(), rep));
        }
    }

    let violations = reports
        .iter()
        .filter(|(_, r)| r.is_applicable() && !r.holds)
        .count();
    let applicable = reports.iter().filter(|(_, r)| r.is_applicable()).count();
    let skipped = reports.len() - applicable;
    CheckOutcome { reports, violations, applicable, skipped }
}

/// Flat key-value diagnostics report.
pub fn write_report(outcome: &CheckOutcome, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("checks.applicable = {}\n", outcome.applicable));
    out.push_str(&format!("checks.skipped = {}\n", outcome.skipped));
    out.push_str(&format!("checks.violations = {}\n", outcome.violations));
    for (run_id, rep) in &outcome.reports {
        let tag = format!("check.{run_id}.{}", rep.name);
        match &rep.not_applicable {
            Some(reason) => {
                out.push_str(&format!("{tag}.status = not-applicable\n"));
                out.push_str(&format!("{tag}.reason = {reason}\n"));
            }
            None => {
                out.push_str(&format!(
                    "{tag}.status = {}\n",
                    if rep.holds { "holds" } else { "violated" }
                ));
                out.push_str(&format!("{tag}.epochs_checked = {}\n", rep.epochs_checked));
                if !rep.holds {
                    out.push_str(&format!(
                        "{tag}.max_relative_violation = {:.6e}\n",
                        rep.max_relative_violation
                    ));
                    if let Some((epoch, lhs, rhs)) = rep.violations.first() {
                        out.push_str(&format!(
                            "{tag}.first_violation = epoch {epoch}: {lhs} > {rhs}\n"
                        ));
                    }
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| HarnessError::Runtime(e.to_string()))
}
