//! LIBSVM-format dataset loading and the synthetic dump format.

use std::fs;
use std::path::Path;

use crate::error::{CoreError, Result};

/// Row of a sparse feature matrix; indices are 0-based, strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn from_dense(row: &[f64]) -> SparseRow {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                indices.push(j as u32);
                values.push(v);
            }
        }
        SparseRow { indices, values }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.scatter(1.0, &mut out);
        out
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&j, &v)| v * w[j as usize])
            .sum()
    }

    /// out += scale * row
    pub fn scatter(&self, scale: f64, out: &mut [f64]) {
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            out[j as usize] += scale * v;
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    LibsvmFile,
    Synthetic,
}

/// Labeled row-sparse dataset (A, b).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub rows: Vec<SparseRow>,
    pub labels: Vec<f64>,
    pub dim: usize,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Parses the LIBSVM text format: one example per line,
/// `<label> idx:val idx:val ...` with 1-based feature indices.
///
/// * the feature dimension is the largest index seen;
/// * if every label is 0 or 1, zeros are remapped to -1;
/// * a leading synthetic-dump header line "<n> <d> <seed> <dist>" (four
///   tokens, no colons) is recognized and skipped, so dumps written by
///   [`save_dataset`] round-trip;
/// * duplicate indices within a row and malformed tokens are parse errors
///   carrying the line number.
///
/// An empty file yields an empty dataset (the caller decides whether that
/// is an error).
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_libsvm(&text)
}

pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    let mut provenance = Provenance::LibsvmFile;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 0 && is_synthetic_header(line) {
            provenance = Provenance::Synthetic;
            // header carries the declared dimension; keep it as a floor so
            // trailing all-zero columns survive a round trip
            if let Some(d) = line.split_whitespace().nth(1).and_then(|t| t.parse().ok()) {
                dim = d;
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_tok = parts.next().expect("non-empty line has a first token");
        let label: f64 = label_tok.parse().map_err(|_| CoreError::Parse {
            line: lineno + 1,
            message: format!("label '{label_tok}' is not a number"),
        })?;

        let mut indices: Vec<u32> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| CoreError::Parse {
                line: lineno + 1,
                message: format!("feature token '{tok}' is not idx:val"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| CoreError::Parse {
                line: lineno + 1,
                message: format!("index '{idx_s}' is not an integer"),
            })?;
            if idx == 0 {
                return Err(CoreError::Parse {
                    line: lineno + 1,
                    message: "feature indices are 1-based".to_string(),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| CoreError::Parse {
                line: lineno + 1,
                message: format!("value '{val_s}' is not a number"),
            })?;
            if !val.is_finite() {
                return Err(CoreError::Parse {
                    line: lineno + 1,
                    message: format!("value {val} is not finite"),
                });
            }
            let zero_based = (idx - 1) as u32;
            if indices.contains(&zero_based) {
                return Err(CoreError::Parse {
                    line: lineno + 1,
                    message: format!("duplicate feature index {idx}"),
                });
            }
            indices.push(zero_based);
            values.push(val);
            dim = dim.max(idx);
        }
        // keep rows sorted by index
        let mut order: Vec<usize> = (0..indices.len()).collect();
        order.sort_unstable_by_key(|&i| indices[i]);
        let indices = order.iter().map(|&i| indices[i]).collect();
        let values = order.iter().map(|&i| values[i]).collect();
        rows.push(SparseRow { indices, values });
        labels.push(label);
    }

    // remap {0,1} labels to {-1,+1}
    if !labels.is_empty() && labels.iter().all(|&l| l == 0.0 || l == 1.0) {
        for l in labels.iter_mut() {
            if *l == 0.0 {
                *l = -1.0;
            }
        }
    }

    Ok(Dataset { rows, labels, dim, provenance })
}

fn is_synthetic_header(line: &str) -> bool {
    let toks: Vec<&str> = line.split_whitespace().collect();
    toks.len() == 4
        && !line.contains(':')
        && toks[0].parse::<usize>().is_ok()
        && toks[1].parse::<usize>().is_ok()
        && toks[2].parse::<u64>().is_ok()
        && toks[3].parse::<f64>().is_err()
}

/// Writes the synthetic dump format: a header line "n d seed dist"
/// followed by LIBSVM rows.
pub fn save_dataset(
    data: &Dataset,
    seed: u64,
    dist: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{} {} {} {}\n", data.n(), data.dim, seed, dist));
    for (row, label) in data.rows.iter().zip(&data.labels) {
        out.push_str(&format_label(*label));
        for (&j, &v) in row.indices.iter().zip(&row.values) {
            out.push_str(&format!(" {}:{}", j + 1, v));
        }
        out.push('\n');
    }
    fs::write(path.as_ref(), out)?;
    Ok(())
}

fn format_label(l: f64) -> String {
    if l == l.trunc() {
        format!("{}", l as i64)
    } else {
        format!("{l}")
    }
}
