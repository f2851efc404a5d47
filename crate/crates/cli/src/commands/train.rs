//! `train`: fit one model per placement case and write checkpoints,
//! normalization scales, and loss histories.

use std::collections::BTreeMap;
use std::path::Path;

use sfr_core::dataset::{climatology, fit_for_training, AssembledSet, SampleRecipe};
use sfr_core::field::ChannelKind;
use sfr_core::model::{train, write_checkpoint, ConvNet, NetShape, TrainConfig, TrainOutcome};
use sfr_core::normalize::Normalizer;
use sfr_core::{ScalarField, SensorSet};

use crate::config::Config;
use crate::error::{config_err, data_err, CliError, Result};
use crate::files::{case_tag, ensure_out_dir, load_dataset, read_split, stride_indices, write_kv_file};

use super::{frames_at, net_shape_from, place_case, placement_cases, recipe_from, train_config_from};

pub fn cmd_train(cfg: &Config, out: &Path, force: bool) -> Result<()> {
    let data = load_dataset(cfg)?;
    let split_path = cfg.require_path("split")?;
    let plan = read_split(&split_path, data.frames.len())?;
    let recipe = recipe_from(cfg)?;
    let (mode, cases) = placement_cases(cfg, &data)?;
    let normalize = cfg.bool_or("normalize", true)?;
    let stride = cfg.usize_or("frame_stride", 1)?;
    let shape = net_shape_from(cfg, recipe.channels().len())?;
    let net_seed = cfg.u64_or("net_seed", sfr_core::model::DEFAULT_INIT_SEED)?;
    let tc = train_config_from(cfg)?;
    tc.validate().map_err(config_err)?;
    let experiment = cfg.str_or("experiment", "run").to_string();

    let train_frames = frames_at(&data, &stride_indices(&plan.train, stride));
    let val_frames = frames_at(&data, &stride_indices(&plan.val, stride));
    if train_frames.is_empty() {
        return Err(CliError::Config("the training split is empty".into()));
    }
    if val_frames.is_empty() {
        return Err(CliError::Config(
            "training needs a non-empty validation split for model selection".into(),
        ));
    }
    // The per-pixel mean is a data statistic: computed over the full
    // training split whatever the stride.
    let clim = if recipe.channels().contains(&ChannelKind::FilledSparse) {
        Some(climatology(&frames_at(&data, &plan.train)).map_err(data_err)?)
    } else {
        None
    };

    ensure_out_dir(out, force)?;

    let mut tags = Vec::with_capacity(cases.len());
    for &(count, seed) in &cases {
        let placement = place_case(&data, &mode, count, seed)?;
        let outcome = train_case(
            &train_frames,
            &val_frames,
            &placement,
            &recipe,
            normalize,
            clim.as_ref(),
            shape,
            net_seed,
            &tc,
            out,
            count,
            seed,
            &experiment,
            stride,
        )?;
        tags.push((case_tag(count, seed), outcome));
    }

    let mut manifest: BTreeMap<String, String> = BTreeMap::new();
    manifest.insert("experiment".into(), experiment);
    manifest.insert("recipe".into(), recipe.channel_list());
    manifest.insert("masked_loss".into(), recipe.masked_loss().to_string());
    manifest.insert("normalize".into(), normalize.to_string());
    manifest.insert("layers".into(), shape.layers.to_string());
    manifest.insert("features".into(), shape.features.to_string());
    manifest.insert("kernel".into(), shape.kernel.to_string());
    manifest.insert("net_seed".into(), net_seed.to_string());
    manifest.insert("learning_rate".into(), tc.adam.learning_rate.to_string());
    manifest.insert("batch_size".into(), tc.batch_size.to_string());
    manifest.insert("max_epochs".into(), tc.max_epochs.to_string());
    manifest.insert("train_seed".into(), tc.seed.to_string());
    manifest.insert("frame_stride".into(), stride.to_string());
    manifest.insert(
        "cases".into(),
        tags.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>().join(","),
    );
    for (tag, outcome) in &tags {
        let best = outcome.best_epoch.map_or("none".to_string(), |e| e.to_string());
        manifest.insert(format!("best_epoch_{tag}"), best);
    }
    write_kv_file(&out.join("train_manifest.txt"), &manifest)
}

#[allow(clippy::too_many_arguments)]
fn train_case(
    train_frames: &[ScalarField],
    val_frames: &[ScalarField],
    placement: &SensorSet,
    recipe: &SampleRecipe,
    normalize: bool,
    clim: Option<&ScalarField>,
    shape: NetShape,
    net_seed: u64,
    tc: &TrainConfig,
    out: &Path,
    count: usize,
    seed: u64,
    experiment: &str,
    stride: usize,
) -> Result<TrainOutcome> {
    let normalizer = if normalize {
        fit_for_training(train_frames, std::slice::from_ref(placement), recipe, clim)
            .map_err(data_err)?
    } else {
        Normalizer::identity(recipe.scale_keys())
    };

    let placements = vec![placement.clone()];
    let train_set = AssembledSet::new(
        train_frames.to_vec(),
        placements.clone(),
        recipe.clone(),
        normalizer.clone(),
        clim.cloned(),
    )
    .map_err(data_err)?;
    let val_set = AssembledSet::new(
        val_frames.to_vec(),
        placements,
        recipe.clone(),
        normalizer.clone(),
        clim.cloned(),
    )
    .map_err(data_err)?;

    let net = ConvNet::init(shape, net_seed).map_err(config_err)?;
    let outcome = train(net, &train_set, &val_set, tc).map_err(data_err)?;

    let tag = case_tag(count, seed);
    let scales_name = format!("scales_{tag}.txt");
    normalizer.save(&out.join(&scales_name)).map_err(data_err)?;

    let mut history = String::from("epoch,train_loss,val_loss\n");
    for e in &outcome.history {
        history.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_loss));
    }
    let history_path = out.join(format!("history_{tag}.csv"));
    std::fs::write(&history_path, history).map_err(|e| crate::error::io_err(&history_path, e))?;

    let mut meta: BTreeMap<String, String> = BTreeMap::new();
    meta.insert("experiment".into(), experiment.to_string());
    meta.insert("recipe".into(), recipe.channel_list());
    meta.insert("masked_loss".into(), recipe.masked_loss().to_string());
    meta.insert("normalize".into(), normalize.to_string());
    meta.insert("scales".into(), scales_name);
    meta.insert("sensor_count".into(), count.to_string());
    meta.insert("placement_seed".into(), seed.to_string());
    meta.insert("layers".into(), shape.layers.to_string());
    meta.insert("features".into(), shape.features.to_string());
    meta.insert("kernel".into(), shape.kernel.to_string());
    meta.insert("net_seed".into(), net_seed.to_string());
    meta.insert("learning_rate".into(), tc.adam.learning_rate.to_string());
    meta.insert("batch_size".into(), tc.batch_size.to_string());
    meta.insert("max_epochs".into(), tc.max_epochs.to_string());
    meta.insert("train_seed".into(), tc.seed.to_string());
    meta.insert("frame_stride".into(), stride.to_string());
    meta.insert("epochs_run".into(), outcome.history.len().to_string());
    if let Some(best) = outcome.best_epoch {
        meta.insert("best_epoch".into(), best.to_string());
    }
    write_checkpoint(&outcome.net, &meta, &out.join(format!("{tag}.sfrnet"))).map_err(data_err)?;
    Ok(outcome)
}
