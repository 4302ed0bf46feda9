//! Solver loops: normal-map proximal random reshuffling (norm-PRR), the
//! epoch-wise proximal baseline (e-PRR), proximal SGD, and deterministic
//! proximal gradient descent, all producing per-epoch traces.

use std::sync::Arc;
use std::time::Instant;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::problem::CompositeObjective;
use crate::schedule::Schedule;
use crate::shuffle::{PermutationStream, ShuffleMode};
use crate::stationarity::{self, TheoryConstants};
use crate::rng::{fold_in, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    NormPrr,
    EPrr,
    Psgd,
    Pgd,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::NormPrr => "norm-prr",
            Algorithm::EPrr => "e-prr",
            Algorithm::Psgd => "psgd",
            Algorithm::Pgd => "pgd",
        }
    }

    pub fn parse(s: &str) -> Result<Algorithm> {
        match s {
            "norm-prr" => Ok(Algorithm::NormPrr),
            "e-prr" => Ok(Algorithm::EPrr),
            "psgd" => Ok(Algorithm::Psgd),
            "pgd" => Ok(Algorithm::Pgd),
            other => Err(CoreError::InvalidParameter(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Which optional per-epoch quantities a run records. The normal-map
/// diagnostics (F^nor, H_tau, e^k) cost extra full-gradient passes per
/// epoch and only apply to norm-PRR.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiagnosticsFlags {
    /// ||e^k|| via the identity e^k = z^{k+1} - z^k + n alpha_k F^nor(z^k);
    /// implies normal-map recording.
    pub record_error_term: bool,
    /// ||F^nor(z^k)||, H_tau(z^k), ||G_lambda(w^k)|| and f(w^k) before each
    /// epoch, plus the final state after the last epoch.
    pub record_normal_map: bool,
    /// sigma_k^2 at the epoch-start iterate.
    pub record_sigma: bool,
    /// Keep a copy of w^{k+1} for every epoch.
    pub record_iterates: bool,
}

impl DiagnosticsFlags {
    pub fn all() -> Self {
        DiagnosticsFlags {
            record_error_term: true,
            record_normal_map: true,
            record_sigma: true,
            record_iterates: false,
        }
    }
}

/// Run-abort predicate evaluated on every inner iterate; `fires(w)` = true
/// marks the run as failed-infeasible.
#[derive(Clone)]
pub struct DomainGuard {
    pub fires: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
    pub description: String,
}

impl std::fmt::Debug for DomainGuard {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DomainGuard({})", self.description)
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub objective: CompositeObjective,
    /// Proximal parameter lambda.
    pub lambda: f64,
    pub schedule: Schedule,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle_mode: ShuffleMode,
    pub diagnostics: DiagnosticsFlags,
    pub domain_guard: Option<DomainGuard>,
    /// Start point in w-space; norm-PRR initializes z^1 = start, so its
    /// first iterate is prox(start, lambda) which may differ from `start`
    /// for non-indicator regularizers. PGD applies the same mapping.
    pub start: Vec<f64>,
    /// tau used when recording the merit function; defaults to the value
    /// from `theory_constants` when available.
    pub merit_tau: Option<f64>,
}

impl RunConfig {
    pub fn new(
        algorithm: Algorithm,
        objective: CompositeObjective,
        lambda: f64,
        schedule: Schedule,
        epochs: usize,
        seed: u64,
        start: Vec<f64>,
    ) -> Self {
        RunConfig {
            algorithm,
            objective,
            lambda,
            schedule,
            epochs,
            seed,
            shuffle_mode: ShuffleMode::IndependentPerEpoch,
            diagnostics: DiagnosticsFlags::default(),
            domain_guard: None,
            start,
            merit_tau: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(CoreError::InvalidParameter("epochs must be positive".to_string()));
        }
        if self.start.len() != self.objective.problem.dim {
            return Err(CoreError::InvalidParameter(format!(
                "start point has length {}, problem dimension is {}",
                self.start.len(),
                self.objective.problem.dim
            )));
        }
        if !linalg::all_finite(&self.start) {
            return Err(CoreError::NonFiniteInput("start point".to_string()));
        }
        let rho = self.objective.regularizer.rho();
        match self.algorithm {
            Algorithm::NormPrr | Algorithm::Pgd => {
                if !(self.lambda > 0.0) || self.lambda * rho >= 1.0 {
                    return Err(CoreError::InvalidParameter(format!(
                        "need 0 < lambda and lambda * rho < 1 (lambda = {}, rho = {rho})",
                        self.lambda
                    )));
                }
            }
            Algorithm::Psgd => {
                let a = self.schedule.max_step(self.epochs);
                if a * rho >= 1.0 {
                    return Err(CoreError::InvalidParameter(
                        "psgd inner prox needs alpha_k * rho < 1".to_string(),
                    ));
                }
            }
            Algorithm::EPrr => {
                let a = self.schedule.max_step(self.epochs);
                let n = self.objective.problem.n as f64;
                if n * a * rho >= 1.0 {
                    return Err(CoreError::InvalidParameter(
                        "e-prr epoch prox needs n * alpha_k * rho < 1".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// tau for merit recording: explicit override, else the theory value,
    /// else none (merit not recorded).
    fn resolve_tau(&self) -> Option<f64> {
        if let Some(t) = self.merit_tau {
            return Some(t);
        }
        let p = &self.objective.problem;
        stationarity::theory_constants(p.lipschitz, self.objective.regularizer.rho(), self.lambda)
            .ok()
            .map(|tc: TheoryConstants| tc.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    FailedInfeasible,
    Diverged,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::FailedInfeasible => "failed-infeasible",
            RunStatus::Diverged => "diverged",
        }
    }
}

/// One per-epoch record. Reported metrics (`psi`, `nat_res_1`) are measured
/// after the epoch's update, i.e. at w^{k+1}; the theory diagnostics
/// (`fnor_norm`, `merit`, `sigma_sq`, `f_start`, `nat_res_lambda`) are
/// measured at the epoch-start state (z^k, w^k), which is how the descent
/// and error estimates index them. NaN marks metrics that could not be
/// evaluated.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub step_size: f64,
    /// psi(w^{k+1})
    pub psi: f64,
    /// ||G_1(w^{k+1})||
    pub nat_res_1: f64,
    pub feasible: bool,
    pub elapsed_ms: f64,
    /// ||F^nor(z^k)||
    pub fnor_norm: Option<f64>,
    /// H_tau(z^k)
    pub merit: Option<f64>,
    /// sigma_k^2 at w^k
    pub sigma_sq: Option<f64>,
    /// ||e^k||
    pub err_norm: Option<f64>,
    /// ||w^{k+1} - w^k||
    pub w_step_norm: Option<f64>,
    /// f(w^k)
    pub f_start: Option<f64>,
    /// ||G_lambda(w^k)|| at the solver's lambda
    pub nat_res_lambda: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub algorithm: Algorithm,
    pub schedule_id: String,
    pub seed: u64,
    pub lambda: f64,
    pub n: usize,
    pub records: Vec<EpochRecord>,
    pub final_w: Vec<f64>,
    pub status: RunStatus,
    pub failure_epoch: Option<usize>,
    /// ||F^nor(z^{T+1})|| and H_tau(z^{T+1}) after the last epoch, when
    /// normal-map recording was on and the run completed.
    pub final_fnor: Option<f64>,
    pub final_merit: Option<f64>,
    /// w^{k+1} per epoch when iterate recording was on.
    pub iterates: Option<Vec<Vec<f64>>>,
    /// tau used for the merit records.
    pub tau: Option<f64>,
}

impl Trace {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn final_psi(&self) -> Option<f64> {
        self.records.last().map(|r| r.psi).filter(|p| p.is_finite())
    }
}

/// Objective value threshold treated as divergence.
const DIVERGENCE_PSI: f64 = 1e12;

/// Dispatches on `cfg.algorithm`.
pub fn run(cfg: &RunConfig) -> Result<Trace> {
    match cfg.algorithm {
        Algorithm::NormPrr => run_norm_prr(cfg),
        Algorithm::EPrr => run_eprr(cfg),
        Algorithm::Psgd => run_psgd(cfg),
        Algorithm::Pgd => run_pgd(cfg),
    }
}

struct TraceBuilder<'a> {
    cfg: &'a RunConfig,
    records: Vec<EpochRecord>,
    iterates: Option<Vec<Vec<f64>>>,
    status: RunStatus,
    failure_epoch: Option<usize>,
    final_fnor: Option<f64>,
    final_merit: Option<f64>,
    tau: Option<f64>,
}

impl<'a> TraceBuilder<'a> {
    fn new(cfg: &'a RunConfig, tau: Option<f64>) -> Self {
        TraceBuilder {
            cfg,
            records: Vec::with_capacity(cfg.epochs),
            iterates: cfg.diagnostics.record_iterates.then(Vec::new),
            status: RunStatus::Completed,
            failure_epoch: None,
            final_fnor: None,
            final_merit: None,
            tau,
        }
    }

    /// Post-update metrics at w^{k+1}; flips status on divergence.
    fn push_epoch(
        &mut self,
        epoch: usize,
        step: f64,
        w: &[f64],
        started: Instant,
        mut pre: PreEpochDiagnostics,
        w_prev: &[f64],
    ) {
        let obj = &self.cfg.objective;
        let psi = obj.eval_psi(w).unwrap_or(f64::NAN);
        let nat1 = if obj.regularizer.rho() < 1.0 {
            stationarity::natural_residual(obj, w, 1.0)
                .map(|g| linalg::norm(&g))
                .unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let guard_ok = self
            .cfg
            .domain_guard
            .as_ref()
            .map_or(true, |g| !(g.fires)(w));
        let feasible = guard_ok && obj.regularizer.in_domain(w);
        pre.w_step_norm = Some(linalg::dist(w, w_prev));
        self.records.push(EpochRecord {
            epoch,
            step_size: step,
            psi,
            nat_res_1: nat1,
            feasible,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
            fnor_norm: pre.fnor_norm,
            merit: pre.merit,
            sigma_sq: pre.sigma_sq,
            err_norm: pre.err_norm,
            w_step_norm: pre.w_step_norm,
            f_start: pre.f_start,
            nat_res_lambda: pre.nat_res_lambda,
        });
        if let Some(its) = &mut self.iterates {
            its.push(w.to_vec());
        }
        if !linalg::all_finite(w) || psi > DIVERGENCE_PSI {
            self.status = RunStatus::Diverged;
            self.failure_epoch = Some(epoch);
        }
    }

    /// Failure record for a mid-epoch abort; metrics are not evaluated
    /// since the iterate may be outside the oracles' domain.
    fn push_failure(&mut self, epoch: usize, step: f64, started: Instant, status: RunStatus) {
        self.records.push(EpochRecord {
            epoch,
            step_size: step,
            psi: f64::NAN,
            nat_res_1: f64::NAN,
            feasible: false,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
            fnor_norm: None,
            merit: None,
            sigma_sq: None,
            err_norm: None,
            w_step_norm: None,
            f_start: None,
            nat_res_lambda: None,
        });
        self.status = status;
        self.failure_epoch = Some(epoch);
    }

    fn finish(self, final_w: Vec<f64>) -> Trace {
        Trace {
            algorithm: self.cfg.algorithm,
            schedule_id: self.cfg.schedule.id(),
            seed: self.cfg.seed,
            lambda: self.cfg.lambda,
            n: self.cfg.objective.problem.n,
            records: self.records,
            final_w,
            status: self.status,
            failure_epoch: self.failure_epoch,
            final_fnor: self.final_fnor,
            final_merit: self.final_merit,
            iterates: self.iterates,
            tau: self.tau,
        }
    }
}

#[derive(Default)]
struct PreEpochDiagnostics {
    fnor_norm: Option<f64>,
    merit: Option<f64>,
    sigma_sq: Option<f64>,
    err_norm: Option<f64>,
    w_step_norm: Option<f64>,
    f_start: Option<f64>,
    nat_res_lambda: Option<f64>,
    fnor_vec: Option<Vec<f64>>,
}

/// norm-PRR (normal-map proximal random reshuffling).
///
/// Per epoch k: draw a permutation pi^k, set z_1 = z^k, w_1 = w^k, then for
/// i = 1..n
///   z_{i+1} = z_i - alpha_k (grad f(w_i, pi_i) + (z_i - w_i)/lambda),
///   w_{i+1} = prox_{lambda phi}(z_{i+1}).
pub fn run_norm_prr(cfg: &RunConfig) -> Result<Trace> {
    cfg.validate()?;
    let obj = &cfg.objective;
    let n = obj.problem.n;
    let dim = obj.problem.dim;
    let lambda = cfg.lambda;
    let tau = cfg.resolve_tau();
    let mut builder = TraceBuilder::new(cfg, tau);

    let mut stream = PermutationStream::new(n, cfg.shuffle_mode, cfg.seed);
    let mut z = cfg.start.clone();
    let mut w = obj.regularizer.prox(&z, lambda)?;
    let mut grad = vec![0.0; dim];
    let mut z_prev = vec![0.0; dim];
    let mut w_prev = vec![0.0; dim];

    let want_nm = cfg.diagnostics.record_normal_map || cfg.diagnostics.record_error_term;

    'epochs: for k in 1..=cfg.epochs {
        let started = Instant::now();
        let alpha = cfg.schedule.step_size(k);
        let mut pre = PreEpochDiagnostics::default();

        if want_nm {
            match epoch_start_diagnostics(cfg, &z, &w, tau) {
                Ok(d) => pre = d,
                Err(CoreError::DomainViolation { .. }) => {
                    builder.push_failure(k, alpha, started, RunStatus::FailedInfeasible);
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        if cfg.diagnostics.record_sigma {
            pre.sigma_sq = Some(obj.problem.component_variance(&w)?);
        }

        z_prev.copy_from_slice(&z);
        w_prev.copy_from_slice(&w);

        let perm = stream.next_permutation();
        for &i in &perm {
            if let Err(e) = obj.problem.component_grad_into(&w, i, &mut grad) {
                match e {
                    CoreError::DomainViolation { .. } => {
                        builder.push_failure(k, alpha, started, RunStatus::FailedInfeasible);
                        break 'epochs;
                    }
                    other => return Err(other),
                }
            }
            for j in 0..dim {
                z[j] -= alpha * (grad[j] + (z[j] - w[j]) / lambda);
            }
            match obj.regularizer.prox_into(&z, lambda, &mut w) {
                Ok(()) => {}
                Err(CoreError::NonFiniteInput(_)) => {
                    builder.push_failure(k, alpha, started, RunStatus::Diverged);
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
            if let Some(g) = &cfg.domain_guard {
                if (g.fires)(&w) {
                    builder.push_failure(k, alpha, started, RunStatus::FailedInfeasible);
                    break 'epochs;
                }
            }
        }

        if cfg.diagnostics.record_error_term {
            if let Some(fnor) = &pre.fnor_vec {
                let scale = n as f64 * alpha;
                let err_sq: f64 = (0..dim)
                    .map(|j| {
                        let e = z[j] - z_prev[j] + scale * fnor[j];
                        e * e
                    })
                    .sum();
                pre.err_norm = Some(err_sq.sqrt());
            }
        }

        builder.push_epoch(k, alpha, &w, started, pre, &w_prev);
        if builder.status != RunStatus::Completed {
            break;
        }
    }

    if builder.status == RunStatus::Completed && want_nm {
        if let Ok(d) = epoch_start_diagnostics(cfg, &z, &w, tau) {
            builder.final_fnor = d.fnor_norm;
            builder.final_merit = d.merit;
        }
    }

    Ok(builder.finish(w))
}

/// Shared pre-epoch measurement for norm-PRR: F^nor(z^k), H_tau(z^k),
/// f(w^k), ||G_lambda(w^k)||.
fn epoch_start_diagnostics(
    cfg: &RunConfig,
    z: &[f64],
    w: &[f64],
    tau: Option<f64>,
) -> Result<PreEpochDiagnostics> {
    let obj = &cfg.objective;
    let nm = stationarity::normal_map(obj, z, cfg.lambda)?;
    let fnor_norm = linalg::norm(&nm.value);
    let psi = obj.eval_psi(w)?;
    let merit = tau.map(|t| psi + 0.5 * t * cfg.lambda * fnor_norm * fnor_norm);
    let g = stationarity::natural_residual(obj, w, cfg.lambda)?;
    Ok(PreEpochDiagnostics {
        fnor_norm: Some(fnor_norm),
        merit,
        sigma_sq: None,
        err_norm: None,
        w_step_norm: None,
        f_start: Some(obj.problem.eval_f(w)?),
        nat_res_lambda: Some(linalg::norm(&g)),
        fnor_vec: Some(nm.value),
    })
}

/// e-PRR: n plain gradient steps on shuffled components, then a single
/// prox with parameter n alpha_k at the epoch end. The domain guard is
/// evaluated after every inner step; inner iterates are not proximally
/// mapped and may leave dom(phi).
pub fn run_eprr(cfg: &RunConfig) -> Result<Trace> {
    cfg.validate()?;
    let obj = &cfg.objective;
    let n = obj.problem.n;
    let dim = obj.problem.dim;
    let mut builder = TraceBuilder::new(cfg, cfg.resolve_tau());

    let mut stream = PermutationStream::new(n, cfg.shuffle_mode, cfg.seed);
    let mut w = cfg.start.clone();
    let mut grad = vec![0.0; dim];
    let mut w_prev = vec![0.0; dim];

    'epochs: for k in 1..=cfg.epochs {
        let started = Instant::now();
        let alpha = cfg.schedule.step_size(k);
        let mut pre = PreEpochDiagnostics::default();
        if cfg.diagnostics.record_sigma && obj.regularizer.in_domain(&w) {
            pre.sigma_sq = obj.problem.component_variance(&w).ok();
            pre.f_start = obj.problem.eval_f(&w).ok();
        }
        w_prev.copy_from_slice(&w);

        let perm = stream.next_permutation();
        for &i in &perm {
            if let Err(e) = obj.problem.component_grad_into(&w, i, &mut grad) {
                match e {
                    CoreError::DomainViolation { .. } => {
                        builder.push_failure(k, alpha, started, RunStatus::FailedInfeasible);
                        break 'epochs;
                    }
                    other => return Err(other),
                }
            }
            linalg::axpy(-alpha, &grad, &mut w);
            if let Some(g) = &cfg.domain_guard {
                if (g.fires)(&w) {
                    builder.push_failure(k, alpha, started, RunStatus::FailedInfeasible);
                    break 'epochs;
                }
            }
            if !linalg::all_finite(&w) {
                builder.push_failure(k, alpha, started, RunStatus::Diverged);
                break 'epochs;
            }
        }

        let step = n as f64 * alpha;
        match obj.regularizer.prox(&w, step) {
            Ok(p) => w = p,
            Err(CoreError::NonFiniteInput(_)) => {
                builder.push_failure(k, alpha, started, RunStatus::Diverged);
                break 'epochs;
            }
            Err(e) => return Err(e),
        }

        builder.push_epoch(k, alpha, &w, started, pre, &w_prev);
        if builder.status != RunStatus::Completed {
            break;
        }
    }

    Ok(builder.finish(w))
}

/// Proximal SGD: n inner steps per epoch, each drawing a component index
/// uniformly with replacement; the step size stays fixed within an epoch
/// and the prox parameter equals the step size.
pub fn run_psgd(cfg: &RunConfig) -> Result<Trace> {
    cfg.validate()?;
    let obj = &cfg.objective;
    let n = obj.problem.n;
    let dim = obj.problem.dim;
    let mut builder = TraceBuilder::new(cfg, cfg.resolve_tau());

    const PSGD_STREAM: u64 = 0x7073_6764;
    let draw_seed = fold_in(cfg.seed, PSGD_STREAM);

    let mut w = cfg.start.clone();
    let mut grad = vec![0.0; dim];
    let mut shifted = vec![0.0; dim];
    let mut w_prev = vec![0.0; dim];

    'epochs: for k in 1..=cfg.epochs {
        let started = Instant::now();
        let alpha = cfg.schedule.step_size(k);
        let mut pre = PreEpochDiagnostics::default();
        if cfg.diagnostics.record_sigma && obj.regularizer.in_domain(&w) {
            pre.sigma_sq = obj.problem.component_variance(&w).ok();
            pre.f_start = obj.problem.eval_f(&w).ok();
        }
        w_prev.copy_from_slice(&w);

        let mut rng = SplitMix64::substream(draw_seed, k as u64);
        for _ in 0..n {
            let i = rng.next_usize(n);
            if let Err(e) = obj.problem.component_grad_into(&w, i, &mut grad) {
                match e {
                    CoreError::DomainViolation { .. } => {
                        builder.push_failure(k, alpha, started, RunStatus::FailedInfeasible);
                        break 'epochs;
                    }
                    other => return Err(other),
                }
            }
            for j in 0..dim {
                shifted[j] = w[j] - alpha * grad[j];
            }
            match obj.regularizer.prox_into(&shifted, alpha, &mut w) {
                Ok(()) => {}
                Err(CoreError::NonFiniteInput(_)) => {
                    builder.push_failure(k, alpha, started, RunStatus::Diverged);
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
            if let Some(g) = &cfg.domain_guard {
                if (g.fires)(&w) {
                    builder.push_failure(k, alpha, started, RunStatus::FailedInfeasible);
                    break 'epochs;
                }
            }
        }

        builder.push_epoch(k, alpha, &w, started, pre, &w_prev);
        if builder.status != RunStatus::Completed {
            break;
        }
    }

    Ok(builder.finish(w))
}

/// Deterministic proximal gradient descent with fixed step lambda:
/// w <- prox_{lambda phi}(w - lambda grad f(w)). One trace record per
/// iteration. Serves as the n = 1 reduction oracle and as the reference
/// optimizer for refining psi*.
pub fn run_pgd(cfg: &RunConfig) -> Result<Trace> {
    cfg.validate()?;
    let obj = &cfg.objective;
    let dim = obj.problem.dim;
    let lambda = cfg.lambda;
    let mut builder = TraceBuilder::new(cfg, cfg.resolve_tau());

    let mut w = obj.regularizer.prox(&cfg.start, lambda)?;
    let mut shifted = vec![0.0; dim];
    let mut w_prev = vec![0.0; dim];

    'epochs: for k in 1..=cfg.epochs {
        let started = Instant::now();
        let mut pre = PreEpochDiagnostics::default();
        if cfg.diagnostics.record_sigma {
            pre.sigma_sq = obj.problem.component_variance(&w).ok();
            pre.f_start = obj.problem.eval_f(&w).ok();
        }
        w_prev.copy_from_slice(&w);

        let grad = match obj.problem.eval_full_grad(&w) {
            Ok(g) => g,
            Err(CoreError::DomainViolation { .. }) => {
                builder.push_failure(k, lambda, started, RunStatus::FailedInfeasible);
                break 'epochs;
            }
            Err(e) => return Err(e),
        };
        for j in 0..dim {
            shifted[j] = w[j] - lambda * grad[j];
        }
        match obj.regularizer.prox_into(&shifted, lambda, &mut w) {
            Ok(()) => {}
            Err(CoreError::NonFiniteInput(_)) => {
                builder.push_failure(k, lambda, started, RunStatus::Diverged);
                break 'epochs;
            }
            Err(e) => return Err(e),
        }

        builder.push_epoch(k, lambda, &w, started, pre, &w_prev);
        if builder.status != RunStatus::Completed {
            break;
        }
    }

    Ok(builder.finish(w))
}

/// Runs PGD from `start` until ||G_lambda(w)|| <= tol or `max_iters` is
/// reached; returns the final iterate and its residual norm.
pub fn refine_minimizer(
    obj: &CompositeObjective,
    start: &[f64],
    lambda: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut w = obj.regularizer.prox(start, lambda)?;
    let mut res = f64::INFINITY;
    for _ in 0..max_iters {
        let g = stationarity::natural_residual(obj, &w, lambda)?;
        res = linalg::norm(&g);
        if res <= tol {
            break;
        }
        let grad = obj.problem.eval_full_grad(&w)?;
        let shifted: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - lambda * gi).collect();
        w = obj.regularizer.prox(&shifted, lambda)?;
    }
    Ok((w, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ProblemInstance;
    use crate::prox::Regularizer;
    use std::sync::Arc;

    fn scalar_quadratic() -> ProblemInstance {
        // f(w) = 0.5 w^2, single component
        ProblemInstance::new(
            1,
            1,
            Arc::new(|w: &[f64], _| Ok(0.5 * w[0] * w[0])),
            Arc::new(|w: &[f64], _, out: &mut [f64]| {
                out[0] = w[0];
                Ok(())
            }),
            1.0,
            0.0,
        )
    }

    fn two_quadratics() -> ProblemInstance {
        // f(w, 0) = 0.5 w^2, f(w, 1) = 0.5 (w - 2)^2
        ProblemInstance::new(
            2,
            1,
            Arc::new(|w: &[f64], i| {
                let c = if i == 0 { 0.0 } else { 2.0 };
                Ok(0.5 * (w[0] - c).powi(2))
            }),
            Arc::new(|w: &[f64], i, out: &mut [f64]| {
                let c = if i == 0 { 0.0 } else { 2.0 };
                out[0] = w[0] - c;
                Ok(())
            }),
            1.0,
            0.0,
        )
    }

    #[test]
    fn norm_prr_single_component_matches_pgd_step() {
        // n = 1, phi = 0, lambda = alpha = 0.5, f = w^2/2, w0 = 1 -> 0.5
        let obj = CompositeObjective::new(scalar_quadratic(), Regularizer::Zero);
        let schedule = Schedule::constant(0.5, 1).unwrap();
        let cfg = RunConfig::new(Algorithm::NormPrr, obj, 0.5, schedule, 1, 7, vec![1.0]);
        let trace = run_norm_prr(&cfg).unwrap();
        assert!((trace.final_w[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn norm_prr_hand_stepped_two_components() {
        // n=2, f1 = w^2/2, f2 = (w-2)^2/2, phi = indicator(R+), lambda = 1,
        // alpha = 0.1, identity permutation, start 0:
        //   i=1: z = 0 - 0.1 (0 + 0) = 0, w = 0
        //   i=2: z = 0 - 0.1 (-2 + 0) = 0.2, w = 0.2
        let obj = CompositeObjective::new(two_quadratics(), Regularizer::Nonneg);
        let schedule = Schedule::constant(0.2, 2).unwrap(); // 0.2 / 2 = 0.1 per step
        let mut cfg = RunConfig::new(Algorithm::NormPrr, obj, 1.0, schedule, 1, 1, vec![0.0]);
        cfg.shuffle_mode = ShuffleMode::FixedIncremental;
        let trace = run_norm_prr(&cfg).unwrap();
        assert!((trace.final_w[0] - 0.2).abs() < 1e-15, "{}", trace.final_w[0]);
    }

    #[test]
    fn eprr_hand_stepped_two_components() {
        // same data: plain steps then prox of indicator:
        // w = 0 - 0.1*(0) = 0; w = 0 - 0.1*(-2) = 0.2; prox -> 0.2
        let obj = CompositeObjective::new(two_quadratics(), Regularizer::Nonneg);
        let schedule = Schedule::constant(0.2, 2).unwrap();
        let mut cfg = RunConfig::new(Algorithm::EPrr, obj, 1.0, schedule, 1, 1, vec![0.0]);
        cfg.shuffle_mode = ShuffleMode::FixedIncremental;
        let trace = run_eprr(&cfg).unwrap();
        assert!((trace.final_w[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn psgd_single_component_gradient_descent() {
        let obj = CompositeObjective::new(scalar_quadratic(), Regularizer::Zero);
        let schedule = Schedule::constant(0.5, 1).unwrap();
        let cfg = RunConfig::new(Algorithm::Psgd, obj, 0.5, schedule, 1, 3, vec![1.0]);
        let trace = run_psgd(&cfg).unwrap();
        assert!((trace.final_w[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn psgd_keeps_indicator_feasible() {
        let obj = CompositeObjective::new(two_quadratics(), Regularizer::Nonneg);
        let schedule = Schedule::constant(0.8, 2).unwrap();
        let cfg = RunConfig::new(Algorithm::Psgd, obj, 1.0, schedule, 50, 11, vec![5.0]);
        let trace = run_psgd(&cfg).unwrap();
        assert!(trace.records.iter().all(|r| r.feasible));
        assert!(trace.final_w[0] >= 0.0);
    }

    #[test]
    fn pgd_fixed_point_at_zero_gradient() {
        let obj = CompositeObjective::new(scalar_quadratic(), Regularizer::Zero);
        let schedule = Schedule::constant(1.0, 1).unwrap();
        let cfg = RunConfig::new(Algorithm::Pgd, obj, 1.0, schedule, 5, 0, vec![0.0]);
        let trace = run_pgd(&cfg).unwrap();
        assert_eq!(trace.final_w[0], 0.0);
        assert!(trace.records.iter().all(|r| r.psi == 0.0));
    }

    #[test]
    fn traces_are_deterministic() {
        let obj = CompositeObjective::new(two_quadratics(), Regularizer::L1 { nu: 0.05 });
        let schedule = Schedule::polynomial(0.5, 0.0, 1.0, false, 2).unwrap();
        let mut cfg = RunConfig::new(Algorithm::NormPrr, obj, 0.7, schedule, 30, 99, vec![3.0]);
        cfg.diagnostics = DiagnosticsFlags::all();
        let a = run_norm_prr(&cfg).unwrap();
        let b = run_norm_prr(&cfg).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.psi, rb.psi);
            assert_eq!(ra.fnor_norm, rb.fnor_norm);
            assert_eq!(ra.err_norm, rb.err_norm);
        }
        assert_eq!(a.final_w, b.final_w);
    }

    #[test]
    fn guard_fires_and_marks_failed() {
        let obj = CompositeObjective::new(two_quadratics(), Regularizer::Zero);
        let schedule = Schedule::constant(10.0, 2).unwrap(); // 5.0 per step: overshoots
        let mut cfg = RunConfig::new(Algorithm::EPrr, obj, 1.0, schedule, 10, 5, vec![0.0]);
        cfg.domain_guard = Some(DomainGuard {
            fires: Arc::new(|w: &[f64]| w[0].abs() > 3.0),
            description: "|w| > 3".to_string(),
        });
        let trace = run_eprr(&cfg).unwrap();
        assert_eq!(trace.status, RunStatus::FailedInfeasible);
        assert!(!trace.records.last().unwrap().feasible);
        assert!(trace.failure_epoch.is_some());
    }

    #[test]
    fn divergence_detected() {
        // step far above 2/L on a quadratic diverges geometrically
        let obj = CompositeObjective::new(scalar_quadratic(), Regularizer::Zero);
        let schedule = Schedule::constant(1000.0, 1).unwrap();
        let cfg = RunConfig::new(Algorithm::EPrr, obj, 1.0, schedule, 200, 5, vec![1.0]);
        let trace = run_eprr(&cfg).unwrap();
        assert_eq!(trace.status, RunStatus::Diverged);
    }

    #[test]
    fn error_term_zero_for_single_component() {
        let obj = CompositeObjective::new(scalar_quadratic(), Regularizer::Zero);
        let schedule = Schedule::constant(0.1, 1).unwrap();
        let mut cfg = RunConfig::new(Algorithm::NormPrr, obj, 0.1, schedule, 20, 1, vec![1.0]);
        cfg.diagnostics = DiagnosticsFlags::all();
        let trace = run_norm_prr(&cfg).unwrap();
        for r in &trace.records {
            // e^k = 0 when n = 1: single step equals one exact normal-map step
            assert!(r.err_norm.unwrap() < 1e-14, "epoch {}: {}", r.epoch, r.err_norm.unwrap());
        }
    }

    #[test]
    fn refine_minimizer_quadratic_l1() {
        // d=1, n=1, f = (w-1)^2/2, nu = 0.5, minimizer = 0.5
        let p = ProblemInstance::new(
            1,
            1,
            Arc::new(|w: &[f64], _| Ok(0.5 * (w[0] - 1.0).powi(2))),
            Arc::new(|w: &[f64], _, out: &mut [f64]| {
                out[0] = w[0] - 1.0;
                Ok(())
            }),
            1.0,
            0.0,
        );
        let obj = CompositeObjective::new(p, Regularizer::L1 { nu: 0.5 });
        let (w, res) = refine_minimizer(&obj, &[3.0], 1.0, 1e-12, 10_000).unwrap();
        assert!(res <= 1e-12);
        assert!((w[0] - 0.5).abs() < 1e-10, "{}", w[0]);
    }
}
