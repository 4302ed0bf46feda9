//! Curve aggregation over seeds: mean and median per
//! (algorithm, schedule, epoch), with failed runs excluded from the curves
//! but counted in the success rates.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::runner::{HarnessError, CSV_HEADER};

type Result<T> = std::result::Result<T, HarnessError>;

/// One parsed CSV row (only the aggregated columns).
#[derive(Debug, Clone)]
struct Row {
    run_id: String,
    algorithm: String,
    schedule_id: String,
    epoch: usize,
    psi: Option<f64>,
    rel_err: Option<f64>,
    nat_res: Option<f64>,
    fnor_norm: Option<f64>,
    feasible: bool,
}

/// Aggregated curves for one (algorithm, schedule) group.
#[derive(Debug, Clone)]
pub struct GroupCurves {
    pub algorithm: String,
    pub schedule_id: String,
    pub seeds_completed: usize,
    /// epoch -> per-metric (mean, median)
    pub epochs: Vec<EpochAggregate>,
}

#[derive(Debug, Clone)]
pub struct EpochAggregate {
    pub epoch: usize,
    pub n_runs: usize,
    pub psi: Option<(f64, f64)>,
    pub rel_err: Option<(f64, f64)>,
    pub nat_res: Option<(f64, f64)>,
    pub fnor_norm: Option<(f64, f64)>,
}

fn parse_opt(field: &str) -> Option<f64> {
    if field.is_empty() {
        None
    } else {
        field.parse().ok()
    }
}

fn parse_csv(text: &str, path: &Path) -> Result<Vec<Row>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Runtime(format!("{}: empty CSV", path.display())))?;
    if header != CSV_HEADER {
        // name the first mismatching column
        let expected: Vec<&str> = CSV_HEADER.split(',').collect();
        let got: Vec<&str> = header.split(',').collect();
        let col = expected
            .iter()
            .zip(got.iter().chain(std::iter::repeat(&"<missing>")))
            .find(|(e, g)| e != g)
            .map(|(e, g)| format!("expected column '{e}', found '{g}'"))
            .unwrap_or_else(|| "trailing columns differ".to_string());
        return Err(HarnessError::Runtime(format!(
            "{}: schema mismatch: {col}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 15 {
            return Err(HarnessError::Runtime(format!(
                "{}: row {} has {} fields, expected 15",
                path.display(),
                i + 2,
                f.len()
            )));
        }
        rows.push(Row {
            run_id: f[0].to_string(),
            algorithm: f[1].to_string(),
            schedule_id: f[2].to_string(),
            epoch: f[4].parse().map_err(|_| {
                HarnessError::Runtime(format!("{}: bad epoch at row {}", path.display(), i + 2))
            })?,
            psi: parse_opt(f[6]),
            rel_err: parse_opt(f[7]),
            nat_res: parse_opt(f[8]),
            fnor_norm: parse_opt(f[9]),
            feasible: f[13] == "true",
        });
    }
    Ok(rows)
}

fn mean_median(values: &mut Vec<f64>) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_unstable_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median = if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    };
    Some((mean, median))
}

/// Reads one or more runs.csv files (shared schema) and aggregates them.
/// A run is excluded from the curves when any of its rows is infeasible
/// (failed or diverged runs).
pub fn aggregate(paths: &[&Path]) -> Result<Vec<GroupCurves>> {
    let mut rows = Vec::new();
    for p in paths {
        let text =
            fs::read_to_string(p).map_err(|e| HarnessError::Runtime(format!("{}: {e}", p.display())))?;
        rows.extend(parse_csv(&text, p)?);
    }

    // completed = every row of the run feasible and psi present
    let mut run_ok: BTreeMap<String, bool> = BTreeMap::new();
    for r in &rows {
        let entry = run_ok.entry(r.run_id.clone()).or_insert(true);
        if !r.feasible || r.psi.is_none() {
            *entry = false;
        }
    }

    let mut groups: BTreeMap<(String, String), BTreeMap<usize, Vec<&Row>>> = BTreeMap::new();
    for r in &rows {
        if !run_ok[&r.run_id] {
            continue;
        }
        groups
            .entry((r.algorithm.clone(), r.schedule_id.clone()))
            .or_default()
            .entry(r.epoch)
            .or_default()
            .push(r);
    }

    let mut out = Vec::new();
    for ((algorithm, schedule_id), epochs) in groups {
        let mut agg = Vec::new();
        let mut max_runs = 0usize;
        for (epoch, rows) in epochs {
            let collect = |get: fn(&Row) -> Option<f64>| -> Option<(f64, f64)> {
                let mut vals: Vec<f64> =
                    rows.iter().filter_map(|r| get(r)).filter(|v| v.is_finite()).collect();
                mean_median(&mut vals)
            };
            max_runs = max_runs.max(rows.len());
            agg.push(EpochAggregate {
                epoch,
                n_runs: rows.len(),
                psi: collect(|r| r.psi),
                rel_err: collect(|r| r.rel_err),
                nat_res: collect(|r| r.nat_res),
                fnor_norm: collect(|r| r.fnor_norm),
            });
        }
        out.push(GroupCurves { algorithm, schedule_id, seeds_completed: max_runs, epochs: agg });
    }
    Ok(out)
}

pub const AGGREGATE_HEADER: &str = "algorithm,schedule_id,epoch,n_runs,mean_psi,median_psi,mean_rel_err,median_rel_err,mean_nat_res,median_nat_res,mean_fnor,median_fnor";

pub fn write_aggregate_csv(groups: &[GroupCurves], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(AGGREGATE_HEADER);
    out.push('\n');
    let fmt_pair = |p: Option<(f64, f64)>| -> (String, String) {
        match p {
            Some((mean, median)) => (format!("{mean}"), format!("{median}")),
            None => (String::new(), String::new()),
        }
    };
    for g in groups {
        for e in &g.epochs {
            let (m_psi, md_psi) = fmt_pair(e.psi);
            let (m_re, md_re) = fmt_pair(e.rel_err);
            let (m_nr, md_nr) = fmt_pair(e.nat_res);
            let (m_fn, md_fn) = fmt_pair(e.fnor_norm);
            out.push_str(&format!(
                "{},{},{},{},{m_psi},{md_psi},{m_re},{md_re},{m_nr},{md_nr},{m_fn},{md_fn}\n",
                g.algorithm, g.schedule_id, e.epoch, e.n_runs
            ));
        }
    }
    fs::write(path, out).map_err(|e| HarnessError::Runtime(e.to_string()))
}
