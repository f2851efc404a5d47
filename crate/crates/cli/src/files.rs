//! Shared on-disk layout helpers: output directories, frame files, manifests,
//! split files, geometry round-tripping, and the thread-count cap.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sfr_core::dataset::SplitPlan;
use sfr_core::io::{read_field, write_field};
use sfr_core::{GridGeometry, Metric, ScalarField, SphericalParams, EARTH_RADIUS_KM};

use crate::config::{parse_kv, Config};
use crate::error::{data_err, io_err, CliError, Result};

/// Environment variable capping how many worker threads a command may use.
pub const THREADS_ENV: &str = "FIELD_RECON_THREADS";

/// Worker thread cap: `FIELD_RECON_THREADS` when set (minimum 1), else 1.
/// Work is dealt to workers by index, so the count never changes results.
pub fn thread_count() -> usize {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => raw.trim().parse::<usize>().unwrap_or(1).max(1),
        Err(_) => 1,
    }
}

/// Create `out` (parents included). An existing non-empty directory is
/// refused unless `force` is set, so reruns cannot silently mix outputs.
pub fn ensure_out_dir(out: &Path, force: bool) -> Result<()> {
    if out.exists() {
        if !out.is_dir() {
            return Err(CliError::Data(format!(
                "{}: exists and is not a directory",
                out.display()
            )));
        }
        let occupied = std::fs::read_dir(out)
            .map_err(|e| io_err(out, e))?
            .next()
            .is_some();
        if occupied && !force {
            return Err(CliError::Data(format!(
                "{}: directory is not empty (pass --force to write into it anyway)",
                out.display()
            )));
        }
        return Ok(());
    }
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))
}

/// Frame file name inside a dataset directory.
pub fn frame_file(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("frame_{index:06}.sfr"))
}

/// Checkpoint / scales / history file names for one placement case.
pub fn case_tag(count: usize, seed: u64) -> String {
    format!("c{count}_s{seed}")
}

/// Write sorted `key=value` lines; keys and values must not contain
/// newlines, and keys must not contain '='.
pub fn write_kv_file(path: &Path, pairs: &BTreeMap<String, String>) -> Result<()> {
    let mut text = String::new();
    for (k, v) in pairs {
        if k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(CliError::Data(format!(
                "{}: key/value {k:?} not representable",
                path.display()
            )));
        }
        text.push_str(k);
        text.push('=');
        text.push_str(v);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Read a `key=value` file back as a [`Config`] for its typed getters.
pub fn read_kv_file(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let values = parse_kv(&text, &path.display().to_string())
        .map_err(|e| CliError::Data(e.to_string()))?;
    Ok(Config::from_map(values))
}

/// Parse the grid geometry from config-style keys (`geometry`, and for the
/// spherical case `lat0`, `dlat`, `lon0`, `dlon`, optional `radius`) for a
/// grid of the given shape.
pub fn geometry_from(cfg: &Config, height: usize, width: usize) -> Result<GridGeometry> {
    let geometry = match cfg.str_or("geometry", "planar") {
        "planar" => GridGeometry::planar(height, width),
        "circular_x" => GridGeometry::circular_x(height, width),
        "spherical" => {
            let params = SphericalParams {
                lat0: cfg.f64_opt("lat0")?.ok_or_else(|| missing("lat0"))?,
                dlat: cfg.f64_opt("dlat")?.ok_or_else(|| missing("dlat"))?,
                lon0: cfg.f64_opt("lon0")?.ok_or_else(|| missing("lon0"))?,
                dlon: cfg.f64_opt("dlon")?.ok_or_else(|| missing("dlon"))?,
                radius: cfg.f64_or("radius", EARTH_RADIUS_KM)?,
            };
            GridGeometry::spherical(height, width, params)
        }
        other => {
            return Err(CliError::Config(format!(
                "key \"geometry\": expected planar, circular_x or spherical, got {other:?}"
            )))
        }
    };
    geometry.map_err(|e| CliError::Config(e.to_string()))
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("spherical geometry needs key {key:?}"))
}

/// The geometry's metric as config-style key/value pairs (the inverse of
/// [`geometry_from`]; the shape travels separately).
pub fn geometry_kv(geometry: &GridGeometry, into: &mut BTreeMap<String, String>) {
    match geometry.metric() {
        Metric::Planar => {
            into.insert("geometry".into(), "planar".into());
        }
        Metric::CircularX => {
            into.insert("geometry".into(), "circular_x".into());
        }
        Metric::Spherical(p) => {
            into.insert("geometry".into(), "spherical".into());
            into.insert("lat0".into(), p.lat0.to_string());
            into.insert("dlat".into(), p.dlat.to_string());
            into.insert("lon0".into(), p.lon0.to_string());
            into.insert("dlon".into(), p.dlon.to_string());
            into.insert("radius".into(), p.radius.to_string());
        }
    }
}

/// A dataset directory: the manifest plus every frame, with geometry and
/// the optional land mask already attached to each frame.
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: Config,
    pub frames: Vec<ScalarField>,
}

impl Dataset {
    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.frames[0].geometry()
    }

    pub fn valid_mask(&self) -> Option<&[u8]> {
        self.frames[0].valid_mask()
    }
}

/// Load the dataset directory named by the config's `data` key.
pub fn load_dataset(cfg: &Config) -> Result<Dataset> {
    let dir = cfg.require_path("data")?;
    let manifest = read_kv_file(&dir.join("manifest.txt"))?;
    let manifest_usize = |key: &str| -> Result<usize> {
        manifest
            .usize_opt(key)
            .map_err(|e| CliError::Data(e.to_string()))?
            .ok_or_else(|| CliError::Data(format!("{}: manifest lacks {key}=", dir.display())))
    };
    let n = manifest_usize("frames")?;
    if n == 0 {
        return Err(CliError::Data(format!("{}: manifest lists zero frames", dir.display())));
    }
    let height = manifest_usize("height")?;
    let width = manifest_usize("width")?;
    let geometry =
        geometry_from(&manifest, height, width).map_err(|e| CliError::Data(e.to_string()))?;

    let land = match manifest.get("land") {
        Some(name) => Some(load_land_mask(&dir.join(name))?),
        None => None,
    };

    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let path = frame_file(&dir, i);
        let mut frame = read_field(&path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            .with_geometry(geometry)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if let Some(mask) = &land {
            frame = frame.with_valid_mask(mask.clone()).map_err(data_err)?;
        }
        frames.push(frame);
    }
    Ok(Dataset { dir, manifest, frames })
}

/// Read a land file (a stored field of exactly 0s and 1s) as a validity
/// mask: 1 is open data, 0 is land.
pub fn load_land_mask(path: &Path) -> Result<Vec<u8>> {
    let field = read_field(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    field
        .values()
        .iter()
        .map(|&v| match v {
            v if v == 0.0 => Ok(0u8),
            v if v == 1.0 => Ok(1u8),
            v => Err(CliError::Data(format!(
                "{}: land mask holds {v}, expected 0 or 1",
                path.display()
            ))),
        })
        .collect()
}

/// Copy a land mask into a dataset directory, validating it on the way.
pub fn import_land_mask(source: &Path, dir: &Path, shape: (usize, usize)) -> Result<String> {
    let field = read_field(source).map_err(|e| CliError::Data(format!("{}: {e}", source.display())))?;
    if field.shape() != shape {
        return Err(CliError::Data(format!(
            "{}: land mask is {}x{}, data is {}x{}",
            source.display(),
            field.height(),
            field.width(),
            shape.0,
            shape.1
        )));
    }
    load_land_mask(source)?;
    let name = "land.sfr".to_string();
    write_field(&field, &dir.join(&name)).map_err(data_err)?;
    Ok(name)
}

fn indices_line(indices: &[usize]) -> String {
    indices
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_indices(cfg: &Config, key: &str, n: usize, origin: &Path) -> Result<Vec<usize>> {
    let list = match cfg.get(key) {
        None => return Err(CliError::Data(format!("{}: missing {key}=", origin.display()))),
        Some("") => Vec::new(),
        Some(_) => cfg
            .usize_list_opt(key)
            .map_err(|e| CliError::Data(e.to_string()))?
            .expect("key checked above"),
    };
    if let Some(&bad) = list.iter().find(|&&i| i >= n) {
        return Err(CliError::Data(format!(
            "{}: {key} index {bad} out of range for {n} frames",
            origin.display()
        )));
    }
    Ok(list)
}

/// Write a split plan with its provenance keys.
pub fn write_split(path: &Path, plan: &SplitPlan, provenance: &[(&str, String)]) -> Result<()> {
    let mut pairs = BTreeMap::new();
    for (k, v) in provenance {
        pairs.insert(k.to_string(), v.clone());
    }
    pairs.insert("train".into(), indices_line(&plan.train));
    pairs.insert("val".into(), indices_line(&plan.val));
    pairs.insert("test".into(), indices_line(&plan.test));
    write_kv_file(path, &pairs)
}

/// Read a split plan back, checking every index against the frame count and
/// that no frame sits in two splits.
pub fn read_split(path: &Path, n_frames: usize) -> Result<SplitPlan> {
    let cfg = read_kv_file(path)?;
    let plan = SplitPlan {
        train: parse_indices(&cfg, "train", n_frames, path)?,
        val: parse_indices(&cfg, "val", n_frames, path)?,
        test: parse_indices(&cfg, "test", n_frames, path)?,
    };
    let mut all: Vec<usize> = plan
        .train
        .iter()
        .chain(&plan.val)
        .chain(&plan.test)
        .copied()
        .collect();
    all.sort_unstable();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Data(format!(
            "{}: a frame appears in more than one split",
            path.display()
        )));
    }
    Ok(plan)
}

/// Pick every `stride`-th element, always keeping the first when any exist.
pub fn stride_indices(indices: &[usize], stride: usize) -> Vec<usize> {
    indices.iter().copied().step_by(stride.max(1)).collect()
}
