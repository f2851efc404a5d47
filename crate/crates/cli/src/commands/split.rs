//! `split`: partition a dataset's frame indices into train/val/test and
//! write the plan as a text file.

use std::path::Path;

use sfr_core::dataset::{extrapolation_split, partitioned_split};

use crate::config::Config;
use crate::error::{config_err, CliError, Result};
use crate::files::{ensure_out_dir, load_dataset, write_split};

pub fn cmd_split(cfg: &Config, out: &Path, force: bool) -> Result<()> {
    let data = load_dataset(cfg)?;
    let n = data.frames.len();

    let scheme = cfg.str_or("split_scheme", "partitioned");
    let (plan, provenance) = match scheme {
        "partitioned" => {
            let chunk_len = cfg.usize_or("chunk_len", 50)?;
            let ratios = (
                cfg.f64_or("train_ratio", 0.8)?,
                cfg.f64_or("val_ratio", 0.1)?,
                cfg.f64_or("test_ratio", 0.1)?,
            );
            let seed = cfg.u64_or("split_seed", 1)?;
            let plan = partitioned_split(n, chunk_len, ratios, seed).map_err(config_err)?;
            let provenance = vec![
                ("scheme", "partitioned".to_string()),
                ("frames", n.to_string()),
                ("chunk_len", chunk_len.to_string()),
                ("train_ratio", ratios.0.to_string()),
                ("val_ratio", ratios.1.to_string()),
                ("test_ratio", ratios.2.to_string()),
                ("split_seed", seed.to_string()),
            ];
            (plan, provenance)
        }
        "extrapolation" => {
            let train_fraction = cfg.f64_or("train_fraction", 0.75)?;
            let val_fraction = cfg.f64_or("val_fraction", 0.1)?;
            let plan = extrapolation_split(n, train_fraction, val_fraction).map_err(config_err)?;
            let provenance = vec![
                ("scheme", "extrapolation".to_string()),
                ("frames", n.to_string()),
                ("train_fraction", train_fraction.to_string()),
                ("val_fraction", val_fraction.to_string()),
            ];
            (plan, provenance)
        }
        other => {
            return Err(CliError::Config(format!(
                "key \"split_scheme\": expected partitioned or extrapolation, got {other:?}"
            )))
        }
    };

    ensure_out_dir(out, force)?;
    write_split(&out.join("split.txt"), &plan, &provenance)
}
