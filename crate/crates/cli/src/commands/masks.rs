//! `masks`: write every raw (unnormalized) input channel the recipe names,
//! for every frame and placement case, as field files. Useful for
//! inspecting what the model actually sees.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use sfr_core::dataset::{build_channel, climatology, SampleRecipe};
use sfr_core::field::ChannelKind;
use sfr_core::io::write_field;
use sfr_core::{ScalarField, SensorSet};

use crate::config::Config;
use crate::error::{data_err, Result};
use crate::files::{ensure_out_dir, load_dataset, thread_count};

use super::{place_case, placement_cases, recipe_from};

pub fn cmd_masks(cfg: &Config, out: &Path, force: bool) -> Result<()> {
    let data = load_dataset(cfg)?;
    let recipe = recipe_from(cfg)?;
    let (mode, cases) = placement_cases(cfg, &data)?;

    let frame_indices: Vec<usize> = match cfg.usize_list_opt("mask_frames")? {
        Some(list) => {
            for &i in &list {
                if i >= data.frames.len() {
                    return Err(crate::error::CliError::Config(format!(
                        "key \"mask_frames\": frame {i} out of range for {} frames",
                        data.frames.len()
                    )));
                }
            }
            list
        }
        None => (0..data.frames.len()).collect(),
    };

    let clim = if recipe.channels().contains(&ChannelKind::FilledSparse) {
        Some(climatology(&data.frames).map_err(data_err)?)
    } else {
        None
    };

    let placements: Vec<(usize, u64, SensorSet)> = cases
        .iter()
        .map(|&(count, seed)| Ok((count, seed, place_case(&data, &mode, count, seed)?)))
        .collect::<Result<_>>()?;

    ensure_out_dir(out, force)?;

    // Frames fan out over workers by index; each (frame, case, kind) output
    // has exactly one writer, so the worker count never affects the files.
    let workers = thread_count().min(frame_indices.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Vec<Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    loop {
                        let slot = next.fetch_add(1, Ordering::Relaxed);
                        let Some(&frame_idx) = frame_indices.get(slot) else {
                            return Ok(());
                        };
                        write_frame_channels(
                            out,
                            frame_idx,
                            &data.frames[frame_idx],
                            &placements,
                            &recipe,
                            clim.as_ref(),
                        )?;
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    for result in results {
        result?;
    }
    Ok(())
}

fn write_frame_channels(
    out: &Path,
    frame_idx: usize,
    frame: &ScalarField,
    placements: &[(usize, u64, SensorSet)],
    recipe: &SampleRecipe,
    clim: Option<&ScalarField>,
) -> Result<()> {
    for (count, seed, placement) in placements {
        let sensors = placement.sampled_from(frame).map_err(data_err)?;
        for &kind in recipe.channels() {
            let channel = build_channel(kind, frame, &sensors, clim).map_err(data_err)?;
            let name = format!("f{frame_idx:06}_c{count}_s{seed}_{}.sfr", kind.name());
            write_field(&channel, &out.join(name)).map_err(data_err)?;
        }
    }
    Ok(())
}
