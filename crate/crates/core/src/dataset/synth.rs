//! Deterministic synthetic field sequences plus the blur ablation.
//!
//! Two sequence characters are provided: a cyclical generator whose frames
//! repeat bit-for-bit with a chosen period (phase is computed from
//! `t % cycle_len`, so repetition is exact by construction, not by floating-
//! point luck), and a chaotic generator mixing plane waves with unrelated
//! temporal frequencies so no cycle ever closes.

use crate::dataset::rng::Rng;
use crate::error::{Error, Result};
use crate::field::ScalarField;

use std::f64::consts::TAU;

/// Temporal character of the cyclical generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CyclicalMode {
    /// Traveling waves only: every pixel's mean over one cycle is zero.
    Wake,
    /// A fixed spatial base plus harmonic swings: nonzero per-pixel mean,
    /// so a climatology baseline has something to say.
    Seasonal,
}

impl CyclicalMode {
    pub fn name(&self) -> &'static str {
        match self {
            CyclicalMode::Wake => "wake",
            CyclicalMode::Seasonal => "seasonal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wake" => Ok(CyclicalMode::Wake),
            "seasonal" => Ok(CyclicalMode::Seasonal),
            other => Err(Error::Parse(format!("unknown cyclical mode \"{other}\""))),
        }
    }
}

/// One traveling-wave component. Spatial wavenumbers are integer cycles
/// across the grid so every mode tiles the frame seamlessly; the temporal
/// harmonic is an integer count of oscillations per cycle, which is what
/// makes wake-mode pixels average to zero over a full period.
#[derive(Debug, Clone, Copy)]
struct WaveMode {
    amplitude: f64,
    cycles_x: f64,
    cycles_y: f64,
    harmonic: f64,
    phase: f64,
}

impl WaveMode {
    fn draw(rng: &mut Rng, cycle_len: usize) -> WaveMode {
        let max_harmonic = 3.min(cycle_len.saturating_sub(1)).max(1);
        WaveMode {
            amplitude: 0.3 + 0.7 * rng.next_f64(),
            cycles_x: (1 + rng.next_below(3)) as f64,
            cycles_y: (1 + rng.next_below(3)) as f64,
            harmonic: (1 + rng.next_below(max_harmonic as u64)) as f64,
            phase: TAU * rng.next_f64(),
        }
    }

    fn eval(&self, fx: f64, fy: f64, u: f64) -> f64 {
        self.amplitude
            * (TAU * (self.cycles_x * fx + self.cycles_y * fy + self.harmonic * u) + self.phase)
                .sin()
    }
}

fn check_sequence_args(frames: usize) -> Result<()> {
    if frames == 0 {
        return Err(Error::InvalidArgument("frame count must be positive".into()));
    }
    Ok(())
}

/// Smooth field sequence with an exact period of `cycle_len` frames:
/// frame `t` and frame `t + cycle_len` are bit-identical. The sequence must
/// be longer than one cycle, otherwise nothing ever repeats and the
/// "cyclical" label would be a lie.
pub fn synth_cyclical(
    height: usize,
    width: usize,
    frames: usize,
    cycle_len: usize,
    mode: CyclicalMode,
    seed: u64,
) -> Result<Vec<ScalarField>> {
    check_sequence_args(frames)?;
    if cycle_len == 0 {
        return Err(Error::InvalidArgument("cycle length must be positive".into()));
    }
    if cycle_len >= frames {
        return Err(Error::InvalidArgument(format!(
            "cycle length {cycle_len} must be shorter than the {frames}-frame sequence"
        )));
    }
    let mut rng = Rng::new(seed);
    let modes: Vec<WaveMode> = (0..4).map(|_| WaveMode::draw(&mut rng, cycle_len)).collect();
    // Seasonal only: a static base field the harmonics swing around.
    let base_level = 1.5 + rng.next_f64();
    let base_cycles_x = (1 + rng.next_below(2)) as f64;
    let base_cycles_y = (1 + rng.next_below(2)) as f64;
    let base_phase = TAU * rng.next_f64();

    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let u = (t % cycle_len) as f64 / cycle_len as f64;
        let field = ScalarField::from_fn(height, width, |row, col| {
            let fx = col as f64 / width as f64;
            let fy = row as f64 / height as f64;
            let wave: f64 = modes.iter().map(|m| m.eval(fx, fy, u)).sum();
            match mode {
                CyclicalMode::Wake => wave,
                CyclicalMode::Seasonal => {
                    base_level
                        + 0.8 * (TAU * (base_cycles_x * fx + base_cycles_y * fy) + base_phase).sin()
                        + wave
                }
            }
        })?;
        out.push(field);
    }
    Ok(out)
}

/// Non-repeating field sequence: a mixture of plane waves whose temporal
/// frequencies are drawn from a continuum, so no common period exists and
/// no two frames coincide.
pub fn synth_chaotic(height: usize, width: usize, frames: usize, seed: u64) -> Result<Vec<ScalarField>> {
    check_sequence_args(frames)?;
    let mut rng = Rng::new(seed);
    struct PlaneWave {
        amplitude: f64,
        kx: f64,
        ky: f64,
        omega: f64,
        phase: f64,
    }
    let waves: Vec<PlaneWave> = (0..6)
        .map(|_| PlaneWave {
            amplitude: 0.3 + 0.7 * rng.next_f64(),
            kx: 0.35 + 1.45 * rng.next_f64(),
            ky: 0.35 + 1.45 * rng.next_f64(),
            omega: 0.4 + 2.2 * rng.next_f64(),
            phase: TAU * rng.next_f64(),
        })
        .collect();
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let time = t as f64;
        let field = ScalarField::from_fn(height, width, |row, col| {
            waves
                .iter()
                .map(|w| {
                    w.amplitude
                        * (w.kx * col as f64 + w.ky * row as f64 + w.omega * time + w.phase).sin()
                })
                .sum()
        })?;
        out.push(field);
    }
    Ok(out)
}

/// Separable Gaussian smoothing, kernel radius ⌈3σ⌉, kernel normalized to
/// sum 1. Columns wrap when the field's geometry is circular along x;
/// every other edge clamps. The validity mask rides along unchanged —
/// masking is a separate channel, not part of the signal.
pub fn gaussian_blur(field: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "blur sigma must be a finite non-negative number, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let mut kernel: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= total;
    }

    let (height, width) = field.shape();
    let wrap_x = field.geometry().is_circular_x();

    // Horizontal pass.
    let mut mid = vec![0.0; height * width];
    for row in 0..height {
        for col in 0..width {
            let mut acc = 0.0;
            for (i, &k) in kernel.iter().enumerate() {
                let offset = i as isize - radius as isize;
                let src = if wrap_x {
                    (col as isize + offset).rem_euclid(width as isize) as usize
                } else {
                    (col as isize + offset).clamp(0, width as isize - 1) as usize
                };
                acc += k * field.get(row, src);
            }
            mid[row * width + col] = acc;
        }
    }
    // Vertical pass, always clamped.
    let mut out = vec![0.0; height * width];
    for row in 0..height {
        for col in 0..width {
            let mut acc = 0.0;
            for (i, &k) in kernel.iter().enumerate() {
                let offset = i as isize - radius as isize;
                let src = (row as isize + offset).clamp(0, height as isize - 1) as usize;
                acc += k * mid[src * width + col];
            }
            out[row * width + col] = acc;
        }
    }
    field.with_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridGeometry;

    fn bit_equal(a: &ScalarField, b: &ScalarField) -> bool {
        a.shape() == b.shape()
            && a.values()
                .iter()
                .zip(b.values())
                .all(|(x, y)| x.to_bits() == y.to_bits())
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    #[test]
    fn cyclical_repeats_bit_for_bit() {
        for mode in [CyclicalMode::Wake, CyclicalMode::Seasonal] {
            let frames = synth_cyclical(12, 16, 120, 50, mode, 7).unwrap();
            for t in 0..70 {
                assert!(bit_equal(&frames[t], &frames[t + 50]), "mode {:?} frame {t}", mode);
            }
            // Within one cycle the field actually moves.
            assert!(!bit_equal(&frames[0], &frames[25]));
        }
    }

    #[test]
    fn wake_pixels_average_to_zero_over_a_cycle() {
        let cycle = 50;
        let frames = synth_cyclical(8, 10, cycle + 1, cycle, CyclicalMode::Wake, 3).unwrap();
        for px in 0..80 {
            let mean: f64 =
                (0..cycle).map(|t| frames[t].values()[px]).sum::<f64>() / cycle as f64;
            assert!(mean.abs() < 1e-9, "pixel {px} mean {mean}");
        }
    }

    #[test]
    fn seasonal_keeps_a_nonzero_climatology() {
        let cycle = 40;
        let frames = synth_cyclical(8, 10, cycle + 1, cycle, CyclicalMode::Seasonal, 3).unwrap();
        let mut grand = 0.0;
        for px in 0..80 {
            grand += (0..cycle).map(|t| frames[t].values()[px]).sum::<f64>() / cycle as f64;
        }
        assert!(grand / 80.0 > 0.5, "seasonal climatology collapsed to {}", grand / 80.0);
    }

    #[test]
    fn cyclical_is_seeded() {
        let a = synth_cyclical(6, 6, 20, 10, CyclicalMode::Wake, 1).unwrap();
        let b = synth_cyclical(6, 6, 20, 10, CyclicalMode::Wake, 1).unwrap();
        let c = synth_cyclical(6, 6, 20, 10, CyclicalMode::Wake, 2).unwrap();
        assert!(bit_equal(&a[3], &b[3]));
        assert!(!bit_equal(&a[3], &c[3]));
    }

    #[test]
    fn cyclical_rejects_degenerate_arguments() {
        assert!(synth_cyclical(4, 4, 0, 2, CyclicalMode::Wake, 1).is_err());
        assert!(synth_cyclical(4, 4, 10, 0, CyclicalMode::Wake, 1).is_err());
        assert!(synth_cyclical(4, 4, 10, 10, CyclicalMode::Wake, 1).is_err());
        assert!(synth_cyclical(4, 4, 10, 11, CyclicalMode::Wake, 1).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [CyclicalMode::Wake, CyclicalMode::Seasonal] {
            assert_eq!(CyclicalMode::parse(mode.name()).unwrap(), mode);
        }
        assert!(CyclicalMode::parse("vortex").is_err());
    }

    #[test]
    fn chaotic_never_settles_into_a_cycle() {
        let frames = synth_chaotic(24, 32, 40, 5).unwrap();
        for lag in 1..20 {
            for t in 0..frames.len() - lag {
                assert!(!bit_equal(&frames[t], &frames[t + lag]));
            }
            let c = correlation(frames[0].values(), frames[lag].values());
            assert!(c < 0.99, "lag {lag} correlation {c}");
        }
    }

    #[test]
    fn chaotic_is_seeded() {
        let a = synth_chaotic(8, 8, 5, 9).unwrap();
        let b = synth_chaotic(8, 8, 5, 9).unwrap();
        let c = synth_chaotic(8, 8, 5, 10).unwrap();
        assert!(bit_equal(&a[4], &b[4]));
        assert!(!bit_equal(&a[4], &c[4]));
    }

    #[test]
    fn blur_zero_sigma_is_identity() {
        let f = ScalarField::from_fn(5, 7, |r, c| (r * 7 + c) as f64).unwrap();
        assert!(bit_equal(&gaussian_blur(&f, 0.0).unwrap(), &f));
    }

    #[test]
    fn blur_leaves_constants_alone() {
        let f = ScalarField::constant(9, 11, 4.25).unwrap();
        let g = gaussian_blur(&f, 2.0).unwrap();
        for &v in g.values() {
            assert!((v - 4.25).abs() < 1e-12);
        }
    }

    #[test]
    fn blur_preserves_mean_along_a_wrapped_axis() {
        // Column-striped field on a wrapping grid: the vertical pass sees
        // constant columns, so the only mixing is the exactly mass-
        // preserving circular horizontal pass.
        let geom = GridGeometry::circular_x(6, 32).unwrap();
        let f = ScalarField::from_fn(6, 32, |_, c| (0.7 * c as f64).sin() + 2.0)
            .unwrap()
            .with_geometry(geom)
            .unwrap();
        let g = gaussian_blur(&f, 3.0).unwrap();
        let mean = |x: &ScalarField| x.values().iter().sum::<f64>() / x.len() as f64;
        assert!((mean(&f) - mean(&g)).abs() < 1e-9);
    }

    #[test]
    fn blur_smooths() {
        let f = ScalarField::from_fn(16, 16, |r, c| if (r + c) % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        let g = gaussian_blur(&f, 1.5).unwrap();
        let energy = |x: &ScalarField| x.values().iter().map(|v| v * v).sum::<f64>();
        assert!(energy(&g) < 0.1 * energy(&f));
    }

    #[test]
    fn blur_supports_the_ablation_sigmas() {
        let frames = synth_chaotic(48, 128, 1, 2).unwrap();
        for sigma in [5.0, 8.0] {
            let g = gaussian_blur(&frames[0], sigma).unwrap();
            assert_eq!(g.shape(), (48, 128));
            assert!(g.values().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn blur_rejects_bad_sigma_and_keeps_metadata() {
        assert!(gaussian_blur(&ScalarField::zeros(3, 3).unwrap(), -1.0).is_err());
        assert!(gaussian_blur(&ScalarField::zeros(3, 3).unwrap(), f64::NAN).is_err());
        let geom = GridGeometry::circular_x(4, 6).unwrap();
        let f = ScalarField::from_fn(4, 6, |r, c| (r + c) as f64)
            .unwrap()
            .with_geometry(geom)
            .unwrap()
            .with_valid_mask(vec![1; 24])
            .unwrap();
        let g = gaussian_blur(&f, 1.0).unwrap();
        assert!(g.geometry().is_circular_x());
        assert_eq!(g.valid_mask(), Some(&[1u8; 24][..]));
    }
}
