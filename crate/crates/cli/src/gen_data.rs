//! `gen-data` subcommand: synthetic dataset dumps in the LIBSVM-based
//! format with a "n d seed dist" header line.

use std::path::Path;

use normprr_core::benchmarks::{gen_tanh_synthetic, save_dataset, SyntheticSpec};

use crate::runner::HarnessError;

type Result<T> = std::result::Result<T, HarnessError>;

/// Parses "n=64,d=10,seed=1" (comma- or whitespace-separated).
fn parse_params(params: &str) -> Result<(usize, usize, u64, f64)> {
    let (mut n, mut d, mut seed, mut noise) = (64usize, 10usize, 1u64, 0.0f64);
    for tok in params.split(|c: char| c == ',' || c.is_whitespace()) {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("gen-data parameter '{tok}' is not k=v")))?;
        match k {
            "n" => n = v.parse().map_err(|_| HarnessError::Config(format!("bad n '{v}'")))?,
            "d" => d = v.parse().map_err(|_| HarnessError::Config(format!("bad d '{v}'")))?,
            "seed" => {
                seed = v.parse().map_err(|_| HarnessError::Config(format!("bad seed '{v}'")))?
            }
            "noise" => {
                noise = v.parse().map_err(|_| HarnessError::Config(format!("bad noise '{v}'")))?
            }
            other => return Err(HarnessError::Config(format!("unknown gen-data parameter '{other}'"))),
        }
    }
    Ok((n, d, seed, noise))
}

pub fn gen_data(kind: &str, params: &str, out: &Path) -> Result<()> {
    match kind {
        "tanh" | "gaussian" => {
            let (n, d, seed, noise) = parse_params(params)?;
            let data = gen_tanh_synthetic(&SyntheticSpec { n, d, seed, label_noise: noise })
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            save_dataset(&data, seed, "gaussian", out)
                .map_err(|e| HarnessError::Runtime(e.to_string()))?;
            Ok(())
        }
        other => Err(HarnessError::Config(format!(
            "unknown data kind '{other}' (available: tanh)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse_with_defaults() {
        assert_eq!(parse_params("n=8,d=3,seed=5").unwrap(), (8, 3, 5, 0.0));
        assert_eq!(parse_params("n=8 d=3 noise=0.2").unwrap(), (8, 3, 1, 0.2));
        assert!(parse_params("q=1").is_err());
    }
}
