//! Grid execution: builds the problem, runs every
//! (algorithm, schedule, seed) combination, and writes CSV plus a flat
//! key-value summary.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use normprr_core::benchmarks::{
    self, gen_tanh_synthetic, load_libsvm, BenchmarkBundle, SyntheticSpec,
};
use normprr_core::schedule::Schedule;
use normprr_core::solvers::{self, Algorithm, RunConfig, RunStatus, Trace};
use normprr_core::stationarity::theory_constants;
use normprr_core::CoreError;

use crate::config::{ExperimentConfig, ProblemSpec, RelErrConvention, ScheduleSpec};

#[derive(Debug)]
pub enum HarnessError {
    Config(String),
    Runtime(String),
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Config(m) => write!(f, "config error: {m}"),
            HarnessError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<CoreError> for HarnessError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_) | CoreError::Parse { .. } | CoreError::Data(_) => {
                HarnessError::Config(e.to_string())
            }
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, HarnessError>;

/// One cell of the run grid.
#[derive(Debug, Clone)]
pub struct RunKey {
    pub run_id: String,
    pub algorithm: Algorithm,
    pub schedule_idx: usize,
    pub schedule_id: String,
    pub seed: u64,
}

pub struct GridResult {
    pub bundle: BenchmarkBundle,
    pub runs: Vec<(RunKey, Trace)>,
    pub psi_reference: f64,
    pub rel_err: RelErrConvention,
    pub lambda: f64,
}

/// Summary row per run plus per-group success accounting.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub per_run: Vec<RunSummaryRow>,
    pub groups: Vec<GroupSummary>,
    pub psi_reference: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummaryRow {
    pub run_id: String,
    pub status: RunStatus,
    pub final_psi: Option<f64>,
    pub final_nat_res: Option<f64>,
    pub min_nat_res: Option<f64>,
    pub failure_epoch: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct GroupSummary {
    pub algorithm: Algorithm,
    pub schedule_id: String,
    pub runs: usize,
    pub completed: usize,
    pub failed_infeasible: usize,
    pub diverged: usize,
    pub success_rate: f64,
}

/// Builds the benchmark bundle described by the config.
pub fn build_bundle(spec: &ProblemSpec) -> Result<BenchmarkBundle> {
    let bundle = match spec {
        ProblemSpec::Toy1d => benchmarks::make_toy_1d(),
        ProblemSpec::Simplex { n, d, support, dist, data_seed } => {
            benchmarks::make_simplex_interpolation(*n, *d, *support, *dist, *data_seed)?
        }
        ProblemSpec::TanhSynthetic { n, d, nu, data_seed, noise } => {
            let data = gen_tanh_synthetic(&SyntheticSpec {
                n: *n,
                d: *d,
                seed: *data_seed,
                label_noise: *noise,
            })?;
            benchmarks::make_tanh_classification(&data, *nu)?
        }
        ProblemSpec::TanhFile { path, nu } => {
            let data = load_libsvm(path)?;
            if data.is_empty() {
                return Err(HarnessError::Config(format!("dataset '{path}' is empty")));
            }
            benchmarks::make_tanh_classification(&data, *nu)?
        }
        ProblemSpec::QuadraticL1 { n, d, cond, nu, data_seed } => {
            benchmarks::make_quadratic_l1(*n, *d, *cond, *nu, *data_seed)?
        }
    };
    Ok(bundle)
}

fn build_schedule(
    spec: &ScheduleSpec,
    bundle: &BenchmarkBundle,
    lambda: f64,
    epochs: usize,
) -> Result<Schedule> {
    let n = bundle.n();
    let schedule = match spec {
        ScheduleSpec::Constant { alpha } => Schedule::constant(*alpha, n)?,
        ScheduleSpec::Polynomial { alpha, beta, gamma, scale_by_n } => {
            Schedule::polynomial(*alpha, *beta, *gamma, *scale_by_n, n)?
        }
        ScheduleSpec::Theory => {
            let lip = bundle.lipschitz();
            if !lip.is_finite() {
                return Err(HarnessError::Config(format!(
                    "problem '{}' has no finite Lipschitz modulus; theory-tuned schedules are unavailable",
                    bundle.name
                )));
            }
            let tc = theory_constants(lip, bundle.objective.regularizer.rho(), lambda)?;
            Schedule::theory_constant(&tc, n, epochs)?
        }
    };
    Ok(schedule)
}

/// Runs the whole grid; `jobs` bounds the worker count (0 = rayon default)
/// and `seed_offset` shifts every configured seed.
pub fn run_grid(cfg: &ExperimentConfig, jobs: usize, seed_offset: u64) -> Result<GridResult> {
    let bundle = build_bundle(&cfg.problem)?;
    let lambda = cfg.lambda.unwrap_or(bundle.recommended_lambda);
    let rho = bundle.objective.regularizer.rho();
    if lambda * rho >= 1.0 {
        return Err(HarnessError::Config(format!(
            "lambda = {lambda} with rho = {rho} leaves the single-valued prox range"
        )));
    }
    let start = match &cfg.start {
        Some(s) => {
            if s.len() != bundle.dim() {
                return Err(HarnessError::Config(format!(
                    "start point has length {}, problem dimension is {}",
                    s.len(),
                    bundle.dim()
                )));
            }
            s.clone()
        }
        None => bundle.default_start.clone(),
    };

    let psi_reference = match cfg.rel_err {
        RelErrConvention::PooledMin => f64::NAN, // filled after the runs
        RelErrConvention::ReferencePsiStar => match &bundle.known_solution {
            Some(sol) => match sol.psi_star {
                Some(p) => p,
                None => {
                    return Err(HarnessError::Config(format!(
                        "problem '{}' has no reference psi*; use rel-err = pooled-min",
                        bundle.name
                    )))
                }
            },
            None => {
                return Err(HarnessError::Config(format!(
                    "problem '{}' has no known solution; use rel-err = pooled-min",
                    bundle.name
                )))
            }
        },
    };

    let mut schedules = Vec::new();
    for spec in &cfg.schedules {
        schedules.push(build_schedule(spec, &bundle, lambda, cfg.epochs)?);
    }

    // grid in deterministic (algorithm, schedule, seed) order
    let mut cells: Vec<(RunKey, RunConfig)> = Vec::new();
    for alg in &cfg.algorithms {
        let algorithm = *alg;
        for (si, schedule) in schedules.iter().enumerate() {
            for &seed in &cfg.seeds {
                let seed = seed.wrapping_add(seed_offset);
                let mut run_cfg = RunConfig::new(
                    algorithm,
                    bundle.objective.clone(),
                    lambda,
                    schedule.clone(),
                    cfg.epochs,
                    seed,
                    start.clone(),
                );
                run_cfg.shuffle_mode = cfg.shuffle;
                run_cfg.domain_guard = bundle.domain_guard.clone();
                if cfg.diagnostics && algorithm == Algorithm::NormPrr {
                    run_cfg.diagnostics.record_normal_map = true;
                    run_cfg.diagnostics.record_error_term = true;
                    run_cfg.diagnostics.record_sigma = true;
                }
                let key = RunKey {
                    run_id: format!("{}-s{si}-seed{seed}", algorithm.name()),
                    algorithm,
                    schedule_idx: si,
                    schedule_id: schedule.id(),
                    seed,
                };
                cells.push((key, run_cfg));
            }
        }
    }

    let execute = |cells: Vec<(RunKey, RunConfig)>| -> Vec<Result<(RunKey, Trace)>> {
        cells
            .into_par_iter()
            .map(|(key, run_cfg)| {
                let trace = solvers::run(&run_cfg)
                    .map_err(|e| HarnessError::Runtime(format!("{}: {e}", key.run_id)))?;
                Ok((key, trace))
            })
            .collect()
    };

    let results = if jobs == 0 {
        execute(cells)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        pool.install(|| execute(cells))
    };

    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }

    let psi_reference = match cfg.rel_err {
        RelErrConvention::ReferencePsiStar => psi_reference,
        RelErrConvention::PooledMin => runs
            .iter()
            .flat_map(|(_, t)| t.records.iter())
            .map(|r| r.psi)
            .filter(|p| p.is_finite())
            .fold(f64::INFINITY, f64::min),
    };

    Ok(GridResult { bundle, runs, psi_reference, rel_err: cfg.rel_err, lambda })
}

pub const CSV_HEADER: &str = "run_id,algorithm,schedule_id,seed,epoch,step_size,psi,rel_err,nat_res,fnor_norm,merit,sigma2,err_norm,feasible,elapsed_ms";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

fn fmt_metric(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Serializes all runs into the per-epoch CSV.
pub fn write_runs_csv(grid: &GridResult, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(1 << 20);
    out.push_str(CSV_HEADER);
    out.push('\n');
    let psi_ref = grid.psi_reference;
    let denom = psi_ref.abs().max(1.0);
    for (key, trace) in &grid.runs {
        for r in &trace.records {
            let rel_err = if r.psi.is_finite() && psi_ref.is_finite() {
                fmt_metric((r.psi - psi_ref) / denom)
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3}\n",
                key.run_id,
                key.algorithm.name(),
                key.schedule_id,
                key.seed,
                r.epoch,
                r.step_size,
                fmt_metric(r.psi),
                rel_err,
                fmt_metric(r.nat_res_1),
                fmt_opt(r.fnor_norm),
                fmt_opt(r.merit),
                fmt_opt(r.sigma_sq),
                fmt_opt(r.err_norm),
                r.feasible,
                r.elapsed_ms,
            ));
        }
    }
    fs::write(path, out).map_err(|e| HarnessError::Runtime(e.to_string()))
}

/// max{1, |psi_ref|} denominator per the relative-error definition.
pub fn relative_error(psi: f64, psi_ref: f64) -> f64 {
    (psi - psi_ref) / psi_ref.abs().max(1.0)
}

pub fn summarize(grid: &GridResult) -> RunSummary {
    let mut per_run = Vec::new();
    for (key, trace) in &grid.runs {
        let min_nat = trace
            .records
            .iter()
            .map(|r| r.nat_res_1)
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min);
        per_run.push(RunSummaryRow {
            run_id: key.run_id.clone(),
            status: trace.status,
            final_psi: trace.final_psi(),
            final_nat_res: trace
                .records
                .last()
                .map(|r| r.nat_res_1)
                .filter(|v| v.is_finite()),
            min_nat_res: min_nat.is_finite().then_some(min_nat),
            failure_epoch: trace.failure_epoch,
        });
    }

    let mut groups: Vec<GroupSummary> = Vec::new();
    for (key, trace) in &grid.runs {
        let entry = groups
            .iter_mut()
            .find(|g| g.algorithm == key.algorithm && g.schedule_id == key.schedule_id);
        let g = match entry {
            Some(g) => g,
            None => {
                groups.push(GroupSummary {
                    algorithm: key.algorithm,
                    schedule_id: key.schedule_id.clone(),
                    runs: 0,
                    completed: 0,
                    failed_infeasible: 0,
                    diverged: 0,
                    success_rate: 0.0,
                });
                groups.last_mut().expect("just pushed")
            }
        };
        g.runs += 1;
        match trace.status {
            RunStatus::Completed => g.completed += 1,
            RunStatus::FailedInfeasible => g.failed_infeasible += 1,
            RunStatus::Diverged => g.diverged += 1,
        }
    }
    for g in groups.iter_mut() {
        g.success_rate = g.completed as f64 / g.runs as f64;
    }

    RunSummary { per_run, groups, psi_reference: grid.psi_reference }
}

/// Flat key-value summary text.
pub fn format_summary(summary: &RunSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!("psi_reference = {}\n", summary.psi_reference));
    for g in &summary.groups {
        let tag = format!("group.{}.{}", g.algorithm.name(), g.schedule_id);
        out.push_str(&format!("{tag}.runs = {}\n", g.runs));
        out.push_str(&format!("{tag}.completed = {}\n", g.completed));
        out.push_str(&format!("{tag}.failed_infeasible = {}\n", g.failed_infeasible));
        out.push_str(&format!("{tag}.diverged = {}\n", g.diverged));
        out.push_str(&format!("{tag}.success_rate = {}\n", g.success_rate));
    }
    for r in &summary.per_run {
        let tag = format!("run.{}", r.run_id);
        out.push_str(&format!("{tag}.status = {}\n", r.status.name()));
        out.push_str(&format!(
            "{tag}.final_psi = {}\n",
            r.final_psi.map(|v| v.to_string()).unwrap_or_default()
        ));
        out.push_str(&format!(
            "{tag}.final_nat_res = {}\n",
            r.final_nat_res.map(|v| v.to_string()).unwrap_or_default()
        ));
        out.push_str(&format!(
            "{tag}.min_nat_res = {}\n",
            r.min_nat_res.map(|v| v.to_string()).unwrap_or_default()
        ));
        out.push_str(&format!(
            "{tag}.failure_epoch = {}\n",
            r.failure_epoch.map(|v| v.to_string()).unwrap_or_default()
        ));
    }
    out
}

/// Output paths for one harness invocation.
pub struct OutputPaths {
    pub dir: PathBuf,
    pub runs_csv: PathBuf,
    pub summary: PathBuf,
    pub aggregate_csv: PathBuf,
    pub diagnostics: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        OutputPaths {
            runs_csv: dir.join("runs.csv"),
            summary: dir.join("summary.txt"),
            aggregate_csv: dir.join("aggregate.csv"),
            diagnostics: dir.join("diagnostics.txt"),
            dir,
        }
    }

    pub fn create_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| HarnessError::Runtime(e.to_string()))
    }
}

/// `run`: execute the grid, write runs.csv and summary.txt.
pub fn execute(cfg: &ExperimentConfig, out: &OutputPaths, jobs: usize, seed_offset: u64) -> Result<(GridResult, RunSummary)> {
    out.create_dir()?;
    let grid = run_grid(cfg, jobs, seed_offset)?;
    write_runs_csv(&grid, &out.runs_csv)?;
    let summary = summarize(&grid);
    fs::write(&out.summary, format_summary(&summary))
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok((grid, summary))
}
