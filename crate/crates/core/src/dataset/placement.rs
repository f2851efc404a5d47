//! Deterministic sensor placement: a seeded partial shuffle over an ordered
//! candidate list.

use crate::dataset::rng::Rng;
use crate::error::{Error, Result};
use crate::field::SensorSet;

/// Where sensor candidates come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PlacementMode {
    /// Any valid pixel, enumerated row-major.
    Free,
    /// A fixed station list; placements draw subsets of it in list order.
    FixedSubset(Vec<(usize, usize)>),
}

/// The placement grid of counts and seeds an experiment trains (or is
/// evaluated) against.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSpec {
    pub counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub mode: PlacementMode,
}

impl PlacementSpec {
    /// Expand into concrete (count, seed) cases. When a count exhausts the
    /// candidate list the subset is the full set whatever the seed, so such
    /// counts collapse to a single case instead of duplicate masks.
    pub fn cases(&self, n_candidates: usize) -> Result<Vec<(usize, u64)>> {
        if self.counts.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidArgument(
                "placement spec needs at least one count and one seed".into(),
            ));
        }
        let mut out = Vec::new();
        for &count in &self.counts {
            if count > n_candidates {
                return Err(Error::InvalidArgument(format!(
                    "placement count {count} exceeds {n_candidates} candidates"
                )));
            }
            if count == n_candidates {
                out.push((count, self.seeds[0]));
            } else {
                for &seed in &self.seeds {
                    out.push((count, seed));
                }
            }
        }
        Ok(out)
    }
}

/// Valid pixels in row-major order (all pixels when no mask is given).
pub fn free_candidates(height: usize, width: usize, valid_mask: Option<&[u8]>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..height {
        for c in 0..width {
            if valid_mask.is_none_or(|m| m[r * width + c] == 1) {
                out.push((r, c));
            }
        }
    }
    out
}

/// Place `count` sensors on a height x width grid. Candidates come from the
/// mode (free pixels or a fixed station list); a seeded partial Fisher-Yates
/// shuffle picks the subset, so the same (grid, mode, count, seed) always
/// yields the same sensors in the same order.
pub fn place_sensors(
    height: usize,
    width: usize,
    valid_mask: Option<&[u8]>,
    count: usize,
    seed: u64,
    mode: &PlacementMode,
) -> Result<SensorSet> {
    let mut candidates = match mode {
        PlacementMode::Free => free_candidates(height, width, valid_mask),
        PlacementMode::FixedSubset(stations) => {
            // Stations must be legal sensor positions themselves.
            let probe = SensorSet::new(height, width, stations.clone())?;
            if let Some(mask) = valid_mask {
                for &(row, col) in probe.locations() {
                    if mask[row * width + col] != 1 {
                        return Err(Error::SensorOffValid { row, col });
                    }
                }
            }
            stations.clone()
        }
    };
    if count > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot place {count} sensors on {} candidate pixels",
            candidates.len()
        )));
    }
    let mut rng = Rng::new(seed);
    rng.partial_shuffle(&mut candidates, count);
    candidates.truncate(count);
    SensorSet::new(height, width, candidates)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_is_deterministic() {
        let a = place_sensors(10, 10, None, 5, 42, &PlacementMode::Free).unwrap();
        let b = place_sensors(10, 10, None, 5, 42, &PlacementMode::Free).unwrap();
        assert_eq!(a, b);
        let c = place_sensors(10, 10, None, 5, 43, &PlacementMode::Free).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sensors_avoid_masked_pixels() {
        // Only the last row is valid.
        let mut mask = vec![0u8; 4 * 4];
        for c in 0..4 {
            mask[3 * 4 + c] = 1;
        }
        let s = place_sensors(4, 4, Some(&mask), 3, 1, &PlacementMode::Free).unwrap();
        assert!(s.locations().iter().all(|&(r, _)| r == 3));
    }

    #[test]
    fn full_count_returns_a_permutation_of_all_candidates() {
        let s = place_sensors(3, 3, None, 9, 7, &PlacementMode::Free).unwrap();
        let mut locs = s.locations().to_vec();
        locs.sort_unstable();
        assert_eq!(locs, free_candidates(3, 3, None));
    }

    #[test]
    fn zero_count_is_legal() {
        let s = place_sensors(3, 3, None, 0, 1, &PlacementMode::Free).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn overdrawn_count_is_rejected() {
        assert!(place_sensors(2, 2, None, 5, 1, &PlacementMode::Free).is_err());
        let mask = vec![0u8, 1, 1, 0];
        assert!(place_sensors(2, 2, Some(&mask), 3, 1, &PlacementMode::Free).is_err());
    }

    #[test]
    fn fixed_subsets_draw_from_the_station_list() {
        let stations = vec![(0, 0), (0, 2), (1, 1), (2, 0), (2, 2)];
        let mode = PlacementMode::FixedSubset(stations.clone());
        let s = place_sensors(3, 3, None, 3, 2, &mode).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.locations().iter().all(|l| stations.contains(l)));
    }

    #[test]
    fn case_expansion_collapses_the_maximal_subset() {
        let spec = PlacementSpec {
            counts: vec![45, 50, 55, 60, 65],
            seeds: vec![1, 2, 3],
            mode: PlacementMode::Free,
        };
        // With 65 candidate stations the 65-sensor case is the full set, so
        // its three seeds collapse into one case: 4 * 3 + 1 = 13.
        let cases = spec.cases(65).unwrap();
        assert_eq!(cases.len(), 13);
        assert_eq!(cases.iter().filter(|&&(c, _)| c == 65).count(), 1);
    }

    #[test]
    fn case_expansion_full_grid() {
        let spec = PlacementSpec {
            counts: vec![10, 20, 30, 50, 100],
            seeds: vec![1, 2, 100, 200, 300],
            mode: PlacementMode::Free,
        };
        assert_eq!(spec.cases(64800).unwrap().len(), 25);
    }
}
