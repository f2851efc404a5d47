//! Grid geometries and distances between pixel centers.
//!
//! Three metrics are supported: planar (unit pixel spacing), circular in x
//! (column index wraps, rows do not), and spherical (pixel centers mapped to
//! latitude/longitude, great-circle distance).

use crate::error::{Error, Result};

/// Mean Earth radius in kilometres; the default sphere for geographic grids.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

const DEG2RAD: f64 = std::f64::consts::PI / 180.0;

/// Slack allowed when checking that a spherical grid spans at most 360 degrees
/// of longitude.
const LON_SPAN_TOL: f64 = 1e-6;

/// Placement of a spherical grid: row/column zero maps to (lat0, lon0) and
/// each step moves by (dlat, dlon) degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalParams {
    pub lat0: f64,
    pub dlat: f64,
    pub lon0: f64,
    pub dlon: f64,
    /// Sphere radius; distances come out in the same unit.
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Planar,
    CircularX,
    Spherical(SphericalParams),
}

/// A grid shape plus the metric used to measure distances on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    height: usize,
    width: usize,
    metric: Metric,
}

impl GridGeometry {
    pub fn planar(height: usize, width: usize) -> Result<Self> {
        Self::with_metric(height, width, Metric::Planar)
    }

    pub fn circular_x(height: usize, width: usize) -> Result<Self> {
        Self::with_metric(height, width, Metric::CircularX)
    }

    pub fn spherical(height: usize, width: usize, params: SphericalParams) -> Result<Self> {
        Self::with_metric(height, width, Metric::Spherical(params))
    }

    pub fn with_metric(height: usize, width: usize, metric: Metric) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Geometry(format!(
                "grid must be non-empty, got {height}x{width}"
            )));
        }
        if let Metric::Spherical(p) = &metric {
            for (name, v) in [
                ("lat0", p.lat0),
                ("dlat", p.dlat),
                ("lon0", p.lon0),
                ("dlon", p.dlon),
                ("radius", p.radius),
            ] {
                if !v.is_finite() {
                    return Err(Error::Geometry(format!("{name} is not finite")));
                }
            }
            if p.radius <= 0.0 {
                return Err(Error::Geometry(format!("radius must be > 0, got {}", p.radius)));
            }
            let last_lat = p.lat0 + p.dlat * (height - 1) as f64;
            if p.lat0.abs() > 90.0 || last_lat.abs() > 90.0 {
                return Err(Error::Geometry(format!(
                    "latitude range [{}, {last_lat}] leaves [-90, 90]",
                    p.lat0
                )));
            }
            if p.dlon.abs() * width as f64 > 360.0 + LON_SPAN_TOL {
                return Err(Error::Geometry(format!(
                    "longitude span {} exceeds 360 degrees",
                    p.dlon.abs() * width as f64
                )));
            }
        }
        Ok(GridGeometry { height, width, metric })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn is_circular_x(&self) -> bool {
        matches!(self.metric, Metric::CircularX)
    }

    /// Latitude/longitude of a pixel center on a spherical grid.
    pub fn pixel_latlon(&self, row: usize, col: usize) -> Option<(f64, f64)> {
        match &self.metric {
            Metric::Spherical(p) => Some((
                p.lat0 + p.dlat * row as f64,
                p.lon0 + p.dlon * col as f64,
            )),
            _ => None,
        }
    }

    fn check_bounds(&self, (row, col): (usize, usize)) -> Result<()> {
        if row >= self.height || col >= self.width {
            return Err(Error::OutOfBounds { row, col });
        }
        Ok(())
    }

    /// Distance between the centers of pixels `a = (row, col)` and `b` under
    /// this grid's metric. Symmetric, zero on identical pixels.
    pub fn pixel_distance(&self, a: (usize, usize), b: (usize, usize)) -> Result<f64> {
        self.check_bounds(a)?;
        self.check_bounds(b)?;
        let d = match &self.metric {
            Metric::Planar => {
                let dr = a.0 as f64 - b.0 as f64;
                let dc = a.1 as f64 - b.1 as f64;
                (dr * dr + dc * dc).sqrt()
            }
            Metric::CircularX => {
                let dr = a.0 as f64 - b.0 as f64;
                let raw = a.1.abs_diff(b.1);
                let dc = raw.min(self.width - raw) as f64;
                (dr * dr + dc * dc).sqrt()
            }
            Metric::Spherical(p) => {
                let (lat_a, lon_a) = (p.lat0 + p.dlat * a.0 as f64, p.lon0 + p.dlon * a.1 as f64);
                let (lat_b, lon_b) = (p.lat0 + p.dlat * b.0 as f64, p.lon0 + p.dlon * b.1 as f64);
                haversine(lat_a, lon_a, lat_b, lon_b, p.radius)?
            }
        };
        Ok(d)
    }
}

/// Great-circle distance between two points given in degrees, on a sphere of
/// the given radius.
///
/// Uses the haversine form: with half-angle deltas dphi and dlambda,
/// h = sin^2(dphi/2) + cos(phi_a) cos(phi_b) sin^2(dlambda/2) and the distance
/// is 2 r asin(sqrt(h)), with sqrt(h) clamped into [0, 1] so rounding can never
/// push asin out of its domain.
pub fn haversine(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64, radius: f64) -> Result<f64> {
    for (name, v) in [
        ("lat_a", lat_a),
        ("lon_a", lon_a),
        ("lat_b", lat_b),
        ("lon_b", lon_b),
        ("radius", radius),
    ] {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} is not finite")));
        }
    }
    if !(lat_a.abs() <= 90.0 && lat_b.abs() <= 90.0) {
        return Err(Error::InvalidArgument(format!(
            "latitude out of [-90, 90]: {lat_a}, {lat_b}"
        )));
    }
    if radius <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be > 0, got {radius}")));
    }
    let phi_a = lat_a * DEG2RAD;
    let phi_b = lat_b * DEG2RAD;
    let half_dphi = (phi_b - phi_a) / 2.0;
    let half_dlam = (lon_b - lon_a) * DEG2RAD / 2.0;
    let h = half_dphi.sin().powi(2) + phi_a.cos() * phi_b.cos() * half_dlam.sin().powi(2);
    let root = h.sqrt().clamp(0.0, 1.0);
    Ok(2.0 * radius * root.asin())
}
