//! `eval`: score trained checkpoints on the test split, for the placements
//! they were trained on (seen) and for fresh placements (unseen), and write
//! the aggregated report plus per-case error maps.

use std::collections::BTreeMap;
use std::path::Path;

use sfr_core::dataset::{assemble_sample, climatology, SampleRecipe};
use sfr_core::field::ChannelKind;
use sfr_core::io::export_pgm;
use sfr_core::metrics::{aggregate_table, average_error_map, relative_l2, report_csv, rmse, EvalRecord};
use sfr_core::model::{read_checkpoint, ConvNet};
use sfr_core::normalize::{Normalizer, ScaleKey};
use sfr_core::{ScalarField, SensorSet};

use crate::config::Config;
use crate::error::{data_err, io_err, CliError, Result};
use crate::files::{case_tag, ensure_out_dir, load_dataset, read_split, stride_indices, write_kv_file};

use super::{frames_at, place_case, placement_cases, recipe_from};

pub fn cmd_eval(cfg: &Config, out: &Path, force: bool) -> Result<()> {
    let data = load_dataset(cfg)?;
    let split_path = cfg.require_path("split")?;
    let plan = read_split(&split_path, data.frames.len())?;
    let recipe = recipe_from(cfg)?;
    let (mode, cases) = placement_cases(cfg, &data)?;
    let models = cfg.require_path("models")?;
    let experiment = cfg.str_or("experiment", "run").to_string();
    let stride = cfg.usize_or("eval_stride", 1)?;

    let unseen = cfg.u64_list_opt("unseen_seeds")?.unwrap_or_default();
    let train_seeds = cfg.require_u64_list("placement_seeds")?;
    if let Some(&clash) = unseen.iter().find(|u| train_seeds.contains(u)) {
        return Err(CliError::Config(format!(
            "unseen_seeds repeats training placement seed {clash}; the two sets must be disjoint"
        )));
    }

    let test_frames = frames_at(&data, &stride_indices(&plan.test, stride));
    if test_frames.is_empty() {
        return Err(CliError::Data("the test split is empty".into()));
    }
    let clim = if recipe.channels().contains(&ChannelKind::FilledSparse) {
        Some(climatology(&frames_at(&data, &plan.train)).map_err(data_err)?)
    } else {
        None
    };

    ensure_out_dir(out, force)?;

    let mut records = Vec::new();
    for &(count, seed) in &cases {
        let tag = case_tag(count, seed);
        let ckpt_path = models.join(format!("{tag}.sfrnet"));
        let (net, meta) = read_checkpoint(&ckpt_path)
            .map_err(|e| CliError::Data(format!("{}: {e}", ckpt_path.display())))?;
        check_meta(&meta, &recipe, count, seed, &ckpt_path)?;
        let scales_path = models.join(format!("scales_{tag}.txt"));
        let normalizer = Normalizer::load(&scales_path)
            .map_err(|e| CliError::Data(format!("{}: {e}", scales_path.display())))?;

        let seen_placement = place_case(&data, &mode, count, seed)?;
        let scored = score_case(&net, &test_frames, &seen_placement, &recipe, &normalizer, clim.as_ref())?;
        push_records(&mut records, &experiment, count, "seen", seed, &scored);
        write_error_map(out, &format!("map_{tag}_seen.pgm"), &scored.pairs)?;

        for &u in &unseen {
            let placement = place_case(&data, &mode, count, u)?;
            let scored = score_case(&net, &test_frames, &placement, &recipe, &normalizer, clim.as_ref())?;
            push_records(&mut records, &experiment, count, "unseen", u, &scored);
            write_error_map(out, &format!("map_{tag}_unseen_{u}.pgm"), &scored.pairs)?;
        }
    }

    let mut raw = String::from("experiment,sensor_count,split,metric,seed,value\n");
    for r in &records {
        raw.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.experiment, r.sensor_count, r.split, r.metric, r.seed, r.value
        ));
    }
    let records_path = out.join("records.csv");
    std::fs::write(&records_path, raw).map_err(|e| io_err(&records_path, e))?;

    let (rows, warnings) = aggregate_table(&records);
    let report_path = out.join("report.csv");
    std::fs::write(&report_path, report_csv(&rows)).map_err(|e| io_err(&report_path, e))?;

    let mut manifest: BTreeMap<String, String> = BTreeMap::new();
    manifest.insert("experiment".into(), experiment);
    manifest.insert("recipe".into(), recipe.channel_list());
    manifest.insert(
        "cases".into(),
        cases.iter().map(|&(c, s)| case_tag(c, s)).collect::<Vec<_>>().join(","),
    );
    manifest.insert(
        "unseen_seeds".into(),
        unseen.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    );
    manifest.insert("test_frames".into(), test_frames.len().to_string());
    manifest.insert("eval_stride".into(), stride.to_string());
    manifest.insert("metrics".into(), "relative_l2,rmse".into());
    for (i, w) in warnings.iter().enumerate() {
        manifest.insert(format!("warning_{i}"), w.clone());
    }
    write_kv_file(&out.join("eval_manifest.txt"), &manifest)
}

/// Refuse checkpoints that were trained under a different recipe or for a
/// different placement case than the one being scored.
fn check_meta(
    meta: &BTreeMap<String, String>,
    recipe: &SampleRecipe,
    count: usize,
    seed: u64,
    path: &Path,
) -> Result<()> {
    let mismatch = |what: &str, want: &str, got: &str| {
        Err(CliError::Data(format!(
            "{}: checkpoint {what} is {got:?}, expected {want:?}",
            path.display()
        )))
    };
    match meta.get("recipe") {
        Some(r) if r != &recipe.channel_list() => {
            return mismatch("recipe", &recipe.channel_list(), r)
        }
        _ => {}
    }
    match meta.get("sensor_count") {
        Some(c) if c != &count.to_string() => {
            return mismatch("sensor count", &count.to_string(), c)
        }
        _ => {}
    }
    match meta.get("placement_seed") {
        Some(s) if s != &seed.to_string() => {
            return mismatch("placement seed", &seed.to_string(), s)
        }
        _ => {}
    }
    Ok(())
}

struct ScoredCase {
    relative_l2_mean: f64,
    rmse_mean: f64,
    /// (truth, denormalized prediction) per test frame, for the error map.
    pairs: Vec<(ScalarField, ScalarField)>,
}

fn score_case(
    net: &ConvNet,
    test_frames: &[ScalarField],
    placement: &SensorSet,
    recipe: &SampleRecipe,
    normalizer: &Normalizer,
    clim: Option<&ScalarField>,
) -> Result<ScoredCase> {
    let mut sum_l2 = 0.0;
    let mut sum_rmse = 0.0;
    let mut pairs = Vec::with_capacity(test_frames.len());
    for frame in test_frames {
        let stack = assemble_sample(frame, placement, recipe, normalizer, clim).map_err(data_err)?;
        let pred_norm = net.forward_field(&stack).map_err(data_err)?;
        let pred = normalizer.denormalize(&pred_norm, ScaleKey::Target).map_err(data_err)?;
        sum_l2 += relative_l2(frame, &pred, frame.valid_mask()).map_err(data_err)?;
        sum_rmse += rmse(frame, &pred, frame.valid_mask()).map_err(data_err)?;
        pairs.push((frame.clone(), pred));
    }
    let n = test_frames.len() as f64;
    Ok(ScoredCase {
        relative_l2_mean: sum_l2 / n,
        rmse_mean: sum_rmse / n,
        pairs,
    })
}

fn push_records(
    records: &mut Vec<EvalRecord>,
    experiment: &str,
    count: usize,
    split: &str,
    seed: u64,
    scored: &ScoredCase,
) {
    for (metric, value) in [
        ("relative_l2", scored.relative_l2_mean),
        ("rmse", scored.rmse_mean),
    ] {
        records.push(EvalRecord {
            experiment: experiment.to_string(),
            sensor_count: count,
            split: split.to_string(),
            metric: metric.to_string(),
            seed,
            value,
        });
    }
}

/// Per-pixel RMS error over the case's test pairs, rendered dark-is-good:
/// 0 maps to black, the worst pixel to white.
fn write_error_map(out: &Path, name: &str, pairs: &[(ScalarField, ScalarField)]) -> Result<()> {
    let refs: Vec<(&ScalarField, &ScalarField)> = pairs.iter().map(|(t, p)| (t, p)).collect();
    let map = average_error_map(&refs).map_err(data_err)?;
    let hi = map.values().iter().cloned().fold(0.0f64, f64::max);
    let hi = if hi > 0.0 { hi } else { 1.0 };
    export_pgm(&map, 0.0, hi, &out.join(name)).map_err(data_err)
}
