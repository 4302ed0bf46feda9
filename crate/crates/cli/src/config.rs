//! Flat key-value experiment configuration.
//!
//! Format: one `key = value` per line, `#` comments, lists comma-separated,
//! multiple schedules separated by `;`. Unknown and duplicate keys are
//! rejected. See the README for the full key table.

use std::collections::BTreeSet;

use normprr_core::benchmarks::FeatureDist;
use normprr_core::solvers::Algorithm;
use normprr_core::shuffle::ShuffleMode;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// Which problem the grid runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Toy1d,
    Simplex { n: usize, d: usize, support: usize, dist: FeatureDist, data_seed: u64 },
    TanhSynthetic { n: usize, d: usize, nu: f64, data_seed: u64, noise: f64 },
    TanhFile { path: String, nu: f64 },
    QuadraticL1 { n: usize, d: usize, cond: f64, nu: f64, data_seed: u64 },
}

impl ProblemSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ProblemSpec::Toy1d => "toy1d",
            ProblemSpec::Simplex { .. } => "simplex",
            ProblemSpec::TanhSynthetic { .. } => "tanh-synthetic",
            ProblemSpec::TanhFile { .. } => "tanh-file",
            ProblemSpec::QuadraticL1 { .. } => "quadratic-l1",
        }
    }
}

/// Schedule specification before the component count is known.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Constant { alpha: f64 },
    Theory,
    Polynomial { alpha: f64, beta: f64, gamma: f64, scale_by_n: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelErrConvention {
    PooledMin,
    ReferencePsiStar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub algorithms: Vec<Algorithm>,
    /// None = use the bundle's recommended lambda.
    pub lambda: Option<f64>,
    pub schedules: Vec<ScheduleSpec>,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub output: String,
    pub rel_err: RelErrConvention,
    pub shuffle: ShuffleMode,
    /// Record normal-map diagnostics (F^nor, H_tau, sigma^2, e^k) on
    /// norm-PRR runs.
    pub diagnostics: bool,
    /// None = bundle default start.
    pub start: Option<Vec<f64>>,
}

struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    fn parse(text: &str) -> Result<KeyValues> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError(format!("line {}: empty key", lineno + 1)));
            }
            if !seen.insert(key.clone()) {
                return Err(ConfigError(format!("duplicate key '{key}'")));
            }
            entries.push((key, value));
        }
        Ok(KeyValues { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(pos).1)
    }

    fn reject_leftovers(&self) -> Result<()> {
        if let Some((k, _)) = self.entries.first() {
            return Err(ConfigError(format!("unknown key '{k}'")));
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| ConfigError(format!("key '{key}': cannot parse '{v}'")))
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Parses one schedule spec like "poly alpha=0.1 gamma=1" or
/// "const alpha=0.5" or "theory".
fn parse_schedule(spec: &str) -> Result<ScheduleSpec> {
    let mut toks = spec.split_whitespace();
    let kind = toks
        .next()
        .ok_or_else(|| ConfigError("empty schedule spec".to_string()))?;
    let mut params: Vec<(String, f64)> = Vec::new();
    let mut flags: Vec<String> = Vec::new();
    for tok in toks {
        match tok.split_once('=') {
            Some((k, v)) => params.push((k.to_string(), parse_num(k, v)?)),
            None => flags.push(tok.to_string()),
        }
    }
    let get = |name: &str| params.iter().find(|(k, _)| k == name).map(|(_, v)| *v);
    let known = |allowed: &[&str]| -> Result<()> {
        for (k, _) in &params {
            if !allowed.contains(&k.as_str()) {
                return Err(ConfigError(format!("schedule '{kind}': unknown parameter '{k}'")));
            }
        }
        Ok(())
    };
    match kind {
        "const" | "constant" => {
            known(&["alpha"])?;
            if !flags.is_empty() {
                return Err(ConfigError(format!("schedule 'const': unknown token '{}'", flags[0])));
            }
            let alpha = get("alpha")
                .ok_or_else(|| ConfigError("schedule 'const' needs alpha".to_string()))?;
            if !(alpha > 0.0) {
                return Err(ConfigError("schedule 'const': alpha must be positive".to_string()));
            }
            Ok(ScheduleSpec::Constant { alpha })
        }
        "theory" => {
            known(&[])?;
            if !flags.is_empty() {
                return Err(ConfigError(format!("schedule 'theory': unknown token '{}'", flags[0])));
            }
            Ok(ScheduleSpec::Theory)
        }
        "poly" | "polynomial" => {
            known(&["alpha", "beta", "gamma"])?;
            let mut scale_by_n = false;
            for f in &flags {
                if f == "scale-n" {
                    scale_by_n = true;
                } else {
                    return Err(ConfigError(format!("schedule 'poly': unknown token '{f}'")));
                }
            }
            let alpha = get("alpha")
                .ok_or_else(|| ConfigError("schedule 'poly' needs alpha".to_string()))?;
            let beta = get("beta").unwrap_or(0.0);
            let gamma = get("gamma")
                .ok_or_else(|| ConfigError("schedule 'poly' needs gamma".to_string()))?;
            if !(alpha > 0.0) {
                return Err(ConfigError("schedule 'poly': alpha must be positive".to_string()));
            }
            if beta < 0.0 {
                return Err(ConfigError("schedule 'poly': beta must be nonnegative".to_string()));
            }
            if !(gamma > 1.0 / 3.0 && gamma <= 1.0) {
                return Err(ConfigError(format!(
                    "schedule 'poly': gamma = {gamma} outside (1/3, 1]"
                )));
            }
            Ok(ScheduleSpec::Polynomial { alpha, beta, gamma, scale_by_n })
        }
        other => Err(ConfigError(format!("unknown schedule kind '{other}'"))),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut kv = KeyValues::parse(text)?;

    let problem_kind = kv
        .take("problem")
        .ok_or_else(|| ConfigError("missing required key 'problem'".to_string()))?;

    let take_num = |kv: &mut KeyValues, key: &str, default: f64| -> Result<f64> {
        match kv.take(key) {
            Some(v) => parse_num(key, &v),
            None => Ok(default),
        }
    };
    let take_usize = |kv: &mut KeyValues, key: &str, default: usize| -> Result<usize> {
        match kv.take(key) {
            Some(v) => parse_num(key, &v),
            None => Ok(default),
        }
    };
    let take_u64 = |kv: &mut KeyValues, key: &str, default: u64| -> Result<u64> {
        match kv.take(key) {
            Some(v) => parse_num(key, &v),
            None => Ok(default),
        }
    };

    let problem = match problem_kind.as_str() {
        "toy1d" => ProblemSpec::Toy1d,
        "simplex" => ProblemSpec::Simplex {
            n: take_usize(&mut kv, "n", 500)?,
            d: take_usize(&mut kv, "d", 50)?,
            support: take_usize(&mut kv, "support", 5)?,
            dist: match kv.take("dist") {
                Some(v) => FeatureDist::parse(&v).map_err(|e| ConfigError(e.to_string()))?,
                None => FeatureDist::Uniform,
            },
            data_seed: take_u64(&mut kv, "data-seed", 1)?,
        },
        "tanh-synthetic" => ProblemSpec::TanhSynthetic {
            n: take_usize(&mut kv, "n", 64)?,
            d: take_usize(&mut kv, "d", 10)?,
            nu: take_num(&mut kv, "nu", 0.01)?,
            data_seed: take_u64(&mut kv, "data-seed", 1)?,
            noise: take_num(&mut kv, "noise", 0.0)?,
        },
        "tanh-file" => ProblemSpec::TanhFile {
            path: kv
                .take("data")
                .ok_or_else(|| ConfigError("problem 'tanh-file' needs key 'data'".to_string()))?,
            nu: take_num(&mut kv, "nu", 0.01)?,
        },
        "quadratic-l1" => ProblemSpec::QuadraticL1 {
            n: take_usize(&mut kv, "n", 128)?,
            d: take_usize(&mut kv, "d", 20)?,
            cond: take_num(&mut kv, "cond", 10.0)?,
            nu: take_num(&mut kv, "nu", 0.01)?,
            data_seed: take_u64(&mut kv, "data-seed", 1)?,
        },
        other => return Err(ConfigError(format!("unknown problem kind '{other}'"))),
    };

    let algorithms: Vec<Algorithm> = {
        let raw = kv
            .take("algorithms")
            .ok_or_else(|| ConfigError("missing required key 'algorithms'".to_string()))?;
        let names = parse_list(&raw);
        if names.is_empty() {
            return Err(ConfigError("key 'algorithms': need at least one".to_string()));
        }
        names
            .iter()
            .map(|s| Algorithm::parse(s).map_err(|e| ConfigError(e.to_string())))
            .collect::<Result<Vec<_>>>()?
    };

    let schedules: Vec<ScheduleSpec> = {
        let raw = kv
            .take("schedule")
            .ok_or_else(|| ConfigError("missing required key 'schedule'".to_string()))?;
        let specs: Vec<&str> = raw.split(';').map(str::trim).filter(|s| !s.is_empty()).collect();
        if specs.is_empty() {
            return Err(ConfigError("key 'schedule': need at least one spec".to_string()));
        }
        specs.iter().map(|s| parse_schedule(s)).collect::<Result<Vec<_>>>()?
    };

    let epochs: usize = {
        let raw = kv
            .take("epochs")
            .ok_or_else(|| ConfigError("missing required key 'epochs'".to_string()))?;
        let e: usize = parse_num("epochs", &raw)?;
        if e == 0 {
            return Err(ConfigError("key 'epochs': must be >= 1".to_string()));
        }
        e
    };

    let seeds: Vec<u64> = {
        let raw = kv
            .take("seeds")
            .ok_or_else(|| ConfigError("missing required key 'seeds'".to_string()))?;
        let list = parse_list(&raw);
        if list.is_empty() {
            return Err(ConfigError("key 'seeds': need at least one".to_string()));
        }
        list.iter()
            .map(|s| parse_num::<u64>("seeds", s))
            .collect::<Result<Vec<_>>>()?
    };

    let lambda = match kv.take("lambda") {
        None => None,
        Some(v) if v == "auto" => None,
        Some(v) => {
            let l: f64 = parse_num("lambda", &v)?;
            if !(l > 0.0) {
                return Err(ConfigError("key 'lambda': must be positive".to_string()));
            }
            Some(l)
        }
    };

    let output = kv.take("output").unwrap_or_else(|| "out".to_string());

    let rel_err = match kv.take("rel-err").as_deref() {
        None | Some("pooled-min") => RelErrConvention::PooledMin,
        Some("reference-psi-star") => RelErrConvention::ReferencePsiStar,
        Some(other) => {
            return Err(ConfigError(format!("key 'rel-err': unknown convention '{other}'")))
        }
    };

    let shuffle = match kv.take("shuffle") {
        None => ShuffleMode::IndependentPerEpoch,
        Some(v) => ShuffleMode::parse(&v).map_err(|e| ConfigError(e.to_string()))?,
    };

    let diagnostics = match kv.take("diagnostics").as_deref() {
        None | Some("off") | Some("none") => false,
        Some("on") | Some("all") => true,
        Some(other) => {
            return Err(ConfigError(format!("key 'diagnostics': expected on/off, got '{other}'")))
        }
    };

    let start = match kv.take("start") {
        None => None,
        Some(v) if v == "default" => None,
        Some(v) => {
            let coords = parse_list(&v)
                .iter()
                .map(|s| parse_num::<f64>("start", s))
                .collect::<Result<Vec<f64>>>()?;
            Some(coords)
        }
    };

    kv.reject_leftovers()?;

    Ok(ExperimentConfig {
        problem,
        algorithms,
        lambda,
        schedules,
        epochs,
        seeds,
        output,
        rel_err,
        shuffle,
        diagnostics,
        start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "problem = toy1d\nalgorithms = norm-prr\nschedule = poly alpha=0.1 gamma=1\nseeds = 1\nepochs = 100\n";

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.problem, ProblemSpec::Toy1d);
        assert_eq!(cfg.algorithms, vec![Algorithm::NormPrr]);
        assert_eq!(cfg.epochs, 100);
        assert_eq!(cfg.seeds, vec![1]);
        assert_eq!(cfg.schedules.len(), 1);
    }

    #[test]
    fn gamma_outside_range_rejected() {
        let text = MINIMAL.replace("gamma=1", "gamma=0.2");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.contains("gamma"), "{err}");
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = format!("{MINIMAL}epochs = 5\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.contains("duplicate key 'epochs'"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{MINIMAL}galaxy = andromeda\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.contains("unknown key 'galaxy'"), "{err}");
    }

    #[test]
    fn unknown_algorithm_rejected() {
        let text = MINIMAL.replace("norm-prr", "adam");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.contains("adam"), "{err}");
    }

    #[test]
    fn missing_required_key_named() {
        let text = "problem = toy1d\nalgorithms = norm-prr\nschedule = const alpha=1\nepochs = 5\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.0.contains("'seeds'"), "{err}");
    }

    #[test]
    fn multiple_schedules_and_seeds() {
        let text = "problem = quadratic-l1\nn = 32\nd = 8\nalgorithms = norm-prr, psgd\nschedule = const alpha=0.5; poly alpha=1 beta=2 gamma=0.75 scale-n\nseeds = 1, 2, 3\nepochs = 10\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.schedules.len(), 2);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(
            cfg.schedules[1],
            ScheduleSpec::Polynomial { alpha: 1.0, beta: 2.0, gamma: 0.75, scale_by_n: true }
        );
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = format!("# grid\n\n{MINIMAL}# tail comment\n");
        assert!(parse_config(&text).is_ok());
    }

    #[test]
    fn problem_params_consumed() {
        let text = "problem = tanh-synthetic\nn = 32\nd = 6\nnu = 0.05\ndata-seed = 9\nalgorithms = psgd\nschedule = const alpha=0.1\nseeds = 1\nepochs = 3\n";
        let cfg = parse_config(text).unwrap();
        match cfg.problem {
            ProblemSpec::TanhSynthetic { n, d, nu, data_seed, noise } => {
                assert_eq!((n, d, data_seed), (32, 6, 9));
                assert!((nu - 0.05).abs() < 1e-15);
                assert_eq!(noise, 0.0);
            }
            other => panic!("wrong problem: {other:?}"),
        }
    }
}
