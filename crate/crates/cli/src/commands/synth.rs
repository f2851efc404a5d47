//! `synth`: generate a frame sequence and write it as a dataset directory.

use std::collections::BTreeMap;
use std::path::Path;

use sfr_core::dataset::{gaussian_blur, synth_chaotic, synth_cyclical, CyclicalMode};
use sfr_core::io::write_field;

use crate::config::Config;
use crate::error::{config_err, data_err, CliError, Result};
use crate::files::{ensure_out_dir, frame_file, geometry_from, geometry_kv, import_land_mask, write_kv_file};

pub fn cmd_synth(cfg: &Config, out: &Path, force: bool) -> Result<()> {
    let height = cfg.require_usize("height")?;
    let width = cfg.require_usize("width")?;
    let n_frames = cfg.require_usize("frames")?;
    let seed = cfg.u64_or("data_seed", 1)?;
    let blur_sigma = cfg.f64_or("blur_sigma", 0.0)?;
    let geometry = geometry_from(cfg, height, width)?;

    let mut manifest: BTreeMap<String, String> = BTreeMap::new();
    let field_kind = cfg.str_or("field", "cyclical");
    let frames = match field_kind {
        "cyclical" => {
            let cycle_len = cfg.require_usize("cycle_len")?;
            let mode = CyclicalMode::parse(cfg.str_or("cycle_mode", "wake")).map_err(config_err)?;
            manifest.insert("cycle_len".into(), cycle_len.to_string());
            manifest.insert("cycle_mode".into(), mode.name().into());
            synth_cyclical(height, width, n_frames, cycle_len, mode, seed).map_err(config_err)?
        }
        "chaotic" => synth_chaotic(height, width, n_frames, seed).map_err(config_err)?,
        other => {
            return Err(CliError::Config(format!(
                "key \"field\": expected cyclical or chaotic, got {other:?}"
            )))
        }
    };

    ensure_out_dir(out, force)?;

    // Geometry first, then blur: the blur wraps columns on circular grids.
    let mut written = Vec::with_capacity(frames.len());
    for frame in frames {
        let frame = frame.with_geometry(geometry).map_err(data_err)?;
        written.push(if blur_sigma > 0.0 {
            gaussian_blur(&frame, blur_sigma).map_err(config_err)?
        } else {
            frame
        });
    }
    for (i, frame) in written.iter().enumerate() {
        write_field(frame, &frame_file(out, i)).map_err(data_err)?;
    }

    if let Some(land_source) = cfg.path_opt("land_file") {
        let name = import_land_mask(&land_source, out, (height, width))?;
        manifest.insert("land".into(), name);
    }

    manifest.insert("field".into(), field_kind.into());
    manifest.insert("frames".into(), written.len().to_string());
    manifest.insert("height".into(), height.to_string());
    manifest.insert("width".into(), width.to_string());
    manifest.insert("data_seed".into(), seed.to_string());
    manifest.insert("blur_sigma".into(), blur_sigma.to_string());
    geometry_kv(&geometry, &mut manifest);
    write_kv_file(&out.join("manifest.txt"), &manifest)
}
