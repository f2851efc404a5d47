//! Command implementations. Each command is a plain function taking the
//! parsed config so tests can drive the pipeline in-process.

pub mod eval;
pub mod gradcheck;
pub mod masks;
pub mod split;
pub mod synth;
pub mod train;

use sfr_core::dataset::{place_sensors, PlacementMode, PlacementSpec, SampleRecipe};
use sfr_core::model::{AdamConfig, NetShape, TrainConfig};
use sfr_core::SensorSet;

use crate::config::Config;
use crate::error::{config_err, data_err, Result};
use crate::files::Dataset;

pub use eval::cmd_eval;
pub use gradcheck::cmd_gradcheck;
pub use masks::cmd_masks;
pub use split::cmd_split;
pub use synth::cmd_synth;
pub use train::cmd_train;

/// The placement mode a config asks for: a `stations` list means fixed
/// subsets of those stations, otherwise any valid pixel is a candidate.
pub fn placement_mode(cfg: &Config) -> Result<PlacementMode> {
    Ok(match cfg.stations_opt("stations")? {
        Some(stations) => PlacementMode::FixedSubset(stations),
        None => PlacementMode::Free,
    })
}

/// The (counts x seeds) placement grid named by `counts` and
/// `placement_seeds`, expanded against this dataset's candidate pixels.
pub fn placement_cases(cfg: &Config, data: &Dataset) -> Result<(PlacementMode, Vec<(usize, u64)>)> {
    let mode = placement_mode(cfg)?;
    let spec = PlacementSpec {
        counts: cfg.require_usize_list("counts")?,
        seeds: cfg.require_u64_list("placement_seeds")?,
        mode: mode.clone(),
    };
    let n_candidates = match &mode {
        PlacementMode::Free => {
            sfr_core::dataset::free_candidates(data.height(), data.width(), data.valid_mask()).len()
        }
        PlacementMode::FixedSubset(stations) => stations.len(),
    };
    let cases = spec.cases(n_candidates).map_err(config_err)?;
    Ok((mode, cases))
}

/// Place one case's sensors on the dataset grid.
pub fn place_case(
    data: &Dataset,
    mode: &PlacementMode,
    count: usize,
    seed: u64,
) -> Result<SensorSet> {
    place_sensors(data.height(), data.width(), data.valid_mask(), count, seed, mode)
        .map_err(data_err)
}

/// The sample recipe named by `recipe` (a channel list) and `masked_loss`.
pub fn recipe_from(cfg: &Config) -> Result<SampleRecipe> {
    let list = cfg.require("recipe")?;
    let masked = cfg.bool_or("masked_loss", true)?;
    SampleRecipe::parse(list, masked).map_err(config_err)
}

/// Network shape from `layers`, `features`, `kernel` (defaults from the
/// model crate), for the given input channel count.
pub fn net_shape_from(cfg: &Config, input_channels: usize) -> Result<NetShape> {
    let defaults = NetShape::with_input(input_channels);
    Ok(NetShape {
        input_channels,
        layers: cfg.usize_or("layers", defaults.layers)?,
        features: cfg.usize_or("features", defaults.features)?,
        kernel: cfg.usize_or("kernel", defaults.kernel)?,
    })
}

/// Optimizer schedule from `max_epochs`, `batch_size`, `learning_rate`,
/// `train_seed`.
pub fn train_config_from(cfg: &Config) -> Result<TrainConfig> {
    let defaults = TrainConfig::default();
    Ok(TrainConfig {
        max_epochs: cfg.usize_or("max_epochs", defaults.max_epochs)?,
        batch_size: cfg.usize_or("batch_size", defaults.batch_size)?,
        adam: AdamConfig {
            learning_rate: cfg.f64_or("learning_rate", defaults.adam.learning_rate)?,
            ..defaults.adam
        },
        seed: cfg.u64_or("train_seed", defaults.seed)?,
    })
}

/// Clone the frames at the given indices (indices are pre-validated by the
/// split reader).
pub fn frames_at(data: &Dataset, indices: &[usize]) -> Vec<sfr_core::ScalarField> {
    indices.iter().map(|&i| data.frames[i].clone()).collect()
}
