//! Dense input channels derived from sparse sensors: nearest-sensor fill,
//! location masks, and distance transforms.
//!
//! Everything here is a direct O(pixels x sources) scan under the grid
//! metric. That is the production algorithm, not a stand-in: it is exact for
//! every metric (including wrap-aware and spherical ones where sweep-based
//! transforms get the geometry wrong), and grid sizes keep it cheap.

use crate::error::{Error, Result};
use crate::field::{ScalarField, SensorSet};
use crate::geometry::GridGeometry;

fn check_sensor_grid(geometry: &GridGeometry, sensors: &SensorSet) -> Result<()> {
    if sensors.height() != geometry.height() || sensors.width() != geometry.width() {
        return Err(Error::ShapeMismatch {
            expected_height: geometry.height(),
            expected_width: geometry.width(),
            height: sensors.height(),
            width: sensors.width(),
        });
    }
    Ok(())
}

/// Require a field whose every value is exactly 0 or 1.
fn check_binary_field(field: &ScalarField, what: &str) -> Result<()> {
    for (i, &v) in field.values().iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            return Err(Error::BadMask(format!(
                "{what} entry {v} at flat index {i} is neither 0 nor 1"
            )));
        }
    }
    Ok(())
}

/// Index of the nearest sensor for every pixel; ties go to the lowest sensor
/// index (the scan keeps the first strict minimum).
pub fn voronoi_assignment(geometry: &GridGeometry, sensors: &SensorSet) -> Result<Vec<usize>> {
    check_sensor_grid(geometry, sensors)?;
    if sensors.is_empty() {
        return Err(Error::EmptySensorSet);
    }
    let (h, w) = (geometry.height(), geometry.width());
    let locs = sensors.locations();
    let mut owner = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let mut best = 0usize;
            let mut best_d = geometry.pixel_distance((r, c), locs[0])?;
            for (i, &loc) in locs.iter().enumerate().skip(1) {
                let d = geometry.pixel_distance((r, c), loc)?;
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            owner.push(best);
        }
    }
    Ok(owner)
}

/// Nearest-sensor fill: every pixel takes the value read by its nearest
/// sensor under the grid metric. The optional validity mask only constrains
/// where sensors may sit; masked-out pixels are still filled (masking is a
/// separate channel).
pub fn voronoi_fill(
    geometry: &GridGeometry,
    sensors: &SensorSet,
    valid_mask: Option<&[u8]>,
) -> Result<ScalarField> {
    let values = sensors.values().ok_or_else(|| {
        Error::InvalidArgument("voronoi fill needs sensor values".into())
    })?;
    if let Some(mask) = valid_mask {
        for &(row, col) in sensors.locations() {
            if mask.get(row * geometry.width() + col).copied() != Some(1) {
                return Err(Error::SensorOffValid { row, col });
            }
        }
    }
    let owner = voronoi_assignment(geometry, sensors)?;
    let filled = owner.iter().map(|&i| values[i]).collect();
    ScalarField::with_geometry_and_values(*geometry, filled)
}

/// Zero the filled field over masked-out pixels: value where land = 1,
/// 0 where land = 0.
pub fn masked_voronoi(filled: &ScalarField, land: &ScalarField) -> Result<ScalarField> {
    filled.same_shape(land)?;
    check_binary_field(land, "land mask")?;
    let values = filled
        .values()
        .iter()
        .zip(land.values())
        .map(|(&v, &m)| if m == 1.0 { v } else { 0.0 })
        .collect();
    filled.with_values(values)
}

/// Binary field with 1 at sensor pixels and 0 elsewhere.
pub fn sparse_location_mask(geometry: &GridGeometry, sensors: &SensorSet) -> Result<ScalarField> {
    check_sensor_grid(geometry, sensors)?;
    let mut values = vec![0.0; geometry.height() * geometry.width()];
    for &(r, c) in sensors.locations() {
        values[r * geometry.width() + c] = 1.0;
    }
    ScalarField::with_geometry_and_values(*geometry, values)
}

/// Distance from every pixel to its nearest source pixel under the grid
/// metric. Source pixels come out exactly 0.
pub fn distance_transform(
    geometry: &GridGeometry,
    sources: &[(usize, usize)],
) -> Result<ScalarField> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument(
            "distance transform needs at least one source pixel".into(),
        ));
    }
    let (h, w) = (geometry.height(), geometry.width());
    for &(row, col) in sources {
        if row >= h || col >= w {
            return Err(Error::OutOfBounds { row, col });
        }
    }
    let mut values = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let mut best = f64::INFINITY;
            for &s in sources {
                let d = geometry.pixel_distance((r, c), s)?;
                if d < best {
                    best = d;
                }
            }
            values.push(best);
        }
    }
    ScalarField::with_geometry_and_values(*geometry, values)
}

/// Distance to the nearest sensor.
pub fn dt_sensor_mask(geometry: &GridGeometry, sensors: &SensorSet) -> Result<ScalarField> {
    check_sensor_grid(geometry, sensors)?;
    if sensors.is_empty() {
        return Err(Error::EmptySensorSet);
    }
    distance_transform(geometry, sensors.locations())
}

/// Distance to the nearest masked-out (land) pixel. `land` is binary with
/// 1 = predict, 0 = masked out; sources are the 0 pixels.
pub fn dt_land_mask(geometry: &GridGeometry, land: &ScalarField) -> Result<ScalarField> {
    if land.height() != geometry.height() || land.width() != geometry.width() {
        return Err(Error::ShapeMismatch {
            expected_height: geometry.height(),
            expected_width: geometry.width(),
            height: land.height(),
            width: land.width(),
        });
    }
    check_binary_field(land, "land mask")?;
    let mut sources = Vec::new();
    for r in 0..land.height() {
        for c in 0..land.width() {
            if land.get(r, c) == 0.0 {
                sources.push((r, c));
            }
        }
    }
    if sources.is_empty() {
        return Err(Error::InvalidArgument(
            "land distance transform needs at least one masked-out pixel".into(),
        ));
    }
    distance_transform(geometry, &sources)
}

/// Sensor readings at sensor pixels, climatology everywhere else.
pub fn filled_sparse_mask(climatology: &ScalarField, sensors: &SensorSet) -> Result<ScalarField> {
    if sensors.height() != climatology.height() || sensors.width() != climatology.width() {
        return Err(Error::ShapeMismatch {
            expected_height: climatology.height(),
            expected_width: climatology.width(),
            height: sensors.height(),
            width: sensors.width(),
        });
    }
    let mut values = climatology.values().to_vec();
    if !sensors.is_empty() {
        let readings = sensors.values().ok_or_else(|| {
            Error::InvalidArgument("filled sparse mask needs sensor values".into())
        })?;
        for (&(r, c), &v) in sensors.locations().iter().zip(readings) {
            values[climatology.idx(r, c)] = v;
        }
    }
    climatology.with_values(values)
}
