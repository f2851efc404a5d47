//! Slow reference routines for cross-checking `sfr-core`.
//!
//! Everything here favors obviousness over speed: brute-force scans over all
//! pixel/sensor pairs, a chord-based great-circle formula that shares no code
//! with the haversine in the main crate, and column wrapping handled by
//! physically replicating the grid three times instead of reducing column
//! deltas. Test suites compare the fast paths against these.
//!
//! Distance expressions that are *meant* to agree bit-for-bit with the main
//! crate (planar and wrapped pixel distances, and the haversine used for
//! ownership scans) deliberately keep the same operation order, so exact
//! tie-break comparisons stay meaningful. The chord formula is the
//! independent check and is compared with a tolerance.

use sfr_core::{GridGeometry, Metric, SphericalParams};

/// Straight-line distance between two pixel centers on a unit-spaced grid.
pub fn planar_distance(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dr = a.0 as f64 - b.0 as f64;
    let dc = a.1 as f64 - b.1 as f64;
    (dr * dr + dc * dc).sqrt()
}

/// Pixel distance when column `width` wraps back onto column zero.
pub fn wrapped_distance(a: (usize, usize), b: (usize, usize), width: usize) -> f64 {
    assert!(a.1 < width && b.1 < width, "column outside grid");
    let dr = a.0 as f64 - b.0 as f64;
    let raw = a.1.abs_diff(b.1);
    let dc = raw.min(width - raw) as f64;
    (dr * dr + dc * dc).sqrt()
}

/// Great-circle distance via the haversine form, inputs in degrees.
pub fn haversine_distance(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64, radius: f64) -> f64 {
    let deg2rad = std::f64::consts::PI / 180.0;
    let phi_a = lat_a * deg2rad;
    let phi_b = lat_b * deg2rad;
    let half_dphi = (phi_b - phi_a) / 2.0;
    let half_dlam = (lon_b - lon_a) * deg2rad / 2.0;
    let h = half_dphi.sin().powi(2) + phi_a.cos() * phi_b.cos() * half_dlam.sin().powi(2);
    2.0 * radius * h.sqrt().clamp(0.0, 1.0).asin()
}

/// Great-circle distance via 3-D chord length, inputs in degrees.
///
/// Maps both points onto the unit sphere, takes the straight-line chord
/// between them, and converts back with `2 r asin(chord / 2)`. Shares no
/// intermediate expressions with the haversine route, so agreement between
/// the two is evidence the spherical metric is right, not a tautology.
pub fn chord_distance(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64, radius: f64) -> f64 {
    let unit = |lat: f64, lon: f64| -> [f64; 3] {
        let deg2rad = std::f64::consts::PI / 180.0;
        let (phi, lam) = (lat * deg2rad, lon * deg2rad);
        [phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin()]
    };
    let u = unit(lat_a, lon_a);
    let v = unit(lat_b, lon_b);
    let chord = ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2) + (u[2] - v[2]).powi(2)).sqrt();
    2.0 * radius * (chord / 2.0).clamp(-1.0, 1.0).asin()
}

/// Latitude/longitude of a pixel center, read off the grid parameters.
fn pixel_latlon(p: &SphericalParams, row: usize, col: usize) -> (f64, f64) {
    (p.lat0 + p.dlat * row as f64, p.lon0 + p.dlon * col as f64)
}

/// Pixel distance under the grid's own metric, recomputed from scratch.
pub fn oracle_distance(geometry: &GridGeometry, a: (usize, usize), b: (usize, usize)) -> f64 {
    match geometry.metric() {
        Metric::Planar => planar_distance(a, b),
        Metric::CircularX => wrapped_distance(a, b, geometry.width()),
        Metric::Spherical(p) => {
            let (lat_a, lon_a) = pixel_latlon(p, a.0, a.1);
            let (lat_b, lon_b) = pixel_latlon(p, b.0, b.1);
            haversine_distance(lat_a, lon_a, lat_b, lon_b, p.radius)
        }
    }
}

/// Index of the closest site for every pixel, by scanning all sites.
///
/// Ties go to the lowest site index (strict `<` keeps the first minimum).
pub fn nearest_site_scan(geometry: &GridGeometry, sites: &[(usize, usize)]) -> Vec<usize> {
    assert!(!sites.is_empty(), "no sites to scan");
    let (h, w) = (geometry.height(), geometry.width());
    let mut owner = Vec::with_capacity(h * w);
    for row in 0..h {
        for col in 0..w {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, &site) in sites.iter().enumerate() {
                let d = oracle_distance(geometry, (row, col), site);
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            owner.push(best);
        }
    }
    owner
}

/// Distance from every pixel to its closest site, by scanning all sites.
pub fn min_distance_scan(geometry: &GridGeometry, sites: &[(usize, usize)]) -> Vec<f64> {
    assert!(!sites.is_empty(), "no sites to scan");
    let (h, w) = (geometry.height(), geometry.width());
    let mut out = Vec::with_capacity(h * w);
    for row in 0..h {
        for col in 0..w {
            let d = sites
                .iter()
                .map(|&site| oracle_distance(geometry, (row, col), site))
                .fold(f64::INFINITY, f64::min);
            out.push(d);
        }
    }
    out
}

/// Three planar copies of each site, shifted by 0, `width`, and `2 * width`
/// columns, grouped per site so `replicated_index / 3` recovers the original.
pub fn replicate_sites_x3(sites: &[(usize, usize)], width: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(sites.len() * 3);
    for &(row, col) in sites {
        assert!(col < width, "column outside grid");
        out.push((row, col));
        out.push((row, col + width));
        out.push((row, col + 2 * width));
    }
    out
}

/// Ownership on a column-wrapped grid, computed without any wrap arithmetic:
/// lay three copies of the grid side by side on a plane, scan the middle
/// copy against all replicated sites, and map winners back to original
/// indices. Copies are grouped per site, so a cross-site tie still resolves
/// to the lowest original index.
pub fn wrapped_ownership_by_replication(
    height: usize,
    width: usize,
    sites: &[(usize, usize)],
) -> Vec<usize> {
    assert!(!sites.is_empty(), "no sites to scan");
    let tripled = replicate_sites_x3(sites, width);
    let mut owner = Vec::with_capacity(height * width);
    for row in 0..height {
        for col in 0..width {
            let pixel = (row, col + width);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, &site) in tripled.iter().enumerate() {
                let d = planar_distance(pixel, site);
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            owner.push(best / 3);
        }
    }
    owner
}

/// Closest-site distances on a column-wrapped grid via the same
/// triple-replication trick as [`wrapped_ownership_by_replication`].
pub fn wrapped_min_distance_by_replication(
    height: usize,
    width: usize,
    sites: &[(usize, usize)],
) -> Vec<f64> {
    assert!(!sites.is_empty(), "no sites to scan");
    let tripled = replicate_sites_x3(sites, width);
    let mut out = Vec::with_capacity(height * width);
    for row in 0..height {
        for col in 0..width {
            let pixel = (row, col + width);
            let d = tripled
                .iter()
                .map(|&site| planar_distance(pixel, site))
                .fold(f64::INFINITY, f64::min);
            out.push(d);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapped_distance_takes_short_way_round() {
        // Columns 1 and 9 on a 10-wide grid are 2 apart through the seam.
        assert_eq!(wrapped_distance((0, 1), (0, 9), 10), 2.0);
        assert_eq!(wrapped_distance((0, 1), (0, 3), 10), 2.0);
    }

    #[test]
    fn chord_and_haversine_agree_on_known_arcs() {
        // Quarter circumference: pole to equator on a unit sphere.
        let quarter = std::f64::consts::FRAC_PI_2;
        assert!((chord_distance(90.0, 0.0, 0.0, 0.0, 1.0) - quarter).abs() < 1e-12);
        assert!((haversine_distance(90.0, 0.0, 0.0, 0.0, 1.0) - quarter).abs() < 1e-12);
        // A generic pair, compared to each other.
        let c = chord_distance(48.85, 2.35, 40.71, -74.0, 6371.0);
        let h = haversine_distance(48.85, 2.35, 40.71, -74.0, 6371.0);
        assert!((c - h).abs() / h < 1e-12, "chord {c} vs haversine {h}");
    }

    #[test]
    fn replication_matches_direct_wrap_scan() {
        let geom = GridGeometry::circular_x(5, 12).unwrap();
        let sites = [(0, 0), (2, 11), (4, 5)];
        assert_eq!(
            wrapped_ownership_by_replication(5, 12, &sites),
            nearest_site_scan(&geom, &sites)
        );
        assert_eq!(
            wrapped_min_distance_by_replication(5, 12, &sites),
            min_distance_scan(&geom, &sites)
        );
    }
}
