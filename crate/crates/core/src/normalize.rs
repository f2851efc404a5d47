//! Abs-max normalization into [-1, 1], one scale per channel kind.
//!
//! Scales are fitted on training data only: the scale for a kind is the
//! largest absolute pixel value seen across all training images of that kind,
//! so training-era images map into [-1, 1] while later images may exceed it.
//! Binary 0/1 mask kinds keep a fixed scale of 1.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ChannelKind, ScalarField};

/// What a scale applies to: an input channel kind or the regression target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScaleKey {
    Channel(ChannelKind),
    Target,
}

impl ScaleKey {
    pub fn name(&self) -> &'static str {
        match self {
            ScaleKey::Channel(k) => k.name(),
            ScaleKey::Target => "target",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "target" {
            return Ok(ScaleKey::Target);
        }
        ChannelKind::parse(s).map(ScaleKey::Channel)
    }

    fn is_binary_mask(&self) -> bool {
        matches!(self, ScaleKey::Channel(k) if k.is_binary_mask())
    }
}

/// Fitted normalization scales.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    scales: BTreeMap<ScaleKey, f64>,
}

/// Streaming fit: feed training targets and channels, then `finish`.
#[derive(Debug, Default)]
pub struct NormalizerFit {
    maxima: BTreeMap<ScaleKey, f64>,
    targets_seen: usize,
}

impl NormalizerFit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_target(&mut self, field: &ScalarField) {
        self.targets_seen += 1;
        self.bump(ScaleKey::Target, field.max_abs());
    }

    pub fn add_channel(&mut self, kind: ChannelKind, field: &ScalarField) {
        self.bump(ScaleKey::Channel(kind), field.max_abs());
    }

    fn bump(&mut self, key: ScaleKey, max_abs: f64) {
        let slot = self.maxima.entry(key).or_insert(0.0);
        if max_abs > *slot {
            *slot = max_abs;
        }
    }

    pub fn finish(self) -> Result<Normalizer> {
        if self.targets_seen == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let mut scales = BTreeMap::new();
        for (key, max_abs) in self.maxima {
            let scale = if key.is_binary_mask() {
                1.0
            } else if max_abs == 0.0 {
                return Err(Error::ZeroScale(key.name().to_string()));
            } else {
                max_abs
            };
            scales.insert(key, scale);
        }
        Ok(Normalizer { scales })
    }
}

/// Fit from in-memory lists: the training targets plus, per kind, every
/// training image of that kind.
pub fn fit_normalizer(
    targets: &[ScalarField],
    channels: &[(ChannelKind, Vec<ScalarField>)],
) -> Result<Normalizer> {
    let mut fit = NormalizerFit::new();
    for t in targets {
        fit.add_target(t);
    }
    for (kind, fields) in channels {
        for f in fields {
            fit.add_channel(*kind, f);
        }
    }
    fit.finish()
}

impl Normalizer {
    /// All-ones scales for the given keys: a pass-through normalizer for
    /// unnormalized baselines.
    pub fn identity(keys: impl IntoIterator<Item = ScaleKey>) -> Normalizer {
        let mut scales = BTreeMap::new();
        for key in keys {
            scales.insert(key, 1.0);
        }
        scales.insert(ScaleKey::Target, 1.0);
        Normalizer { scales }
    }

    pub fn scale(&self, key: ScaleKey) -> Result<f64> {
        self.scales
            .get(&key)
            .copied()
            .ok_or_else(|| Error::UnknownScaleKind(key.name().to_string()))
    }

    pub fn keys(&self) -> impl Iterator<Item = ScaleKey> + '_ {
        self.scales.keys().copied()
    }

    /// Divide by the kind's scale; mask and geometry ride along.
    pub fn normalize(&self, field: &ScalarField, key: ScaleKey) -> Result<ScalarField> {
        let s = self.scale(key)?;
        field.map(|v| v / s)
    }

    /// Multiply back to physical units.
    pub fn denormalize(&self, field: &ScalarField, key: ScaleKey) -> Result<ScalarField> {
        let s = self.scale(key)?;
        field.map(|v| v * s)
    }

    /// One `name=scale` line per fitted key, sorted, trailing newline.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, scale) in &self.scales {
            let _ = writeln!(out, "{}={}", key.name(), scale);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Normalizer> {
        let mut scales = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (name, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("normalizer line {}: missing '='", lineno + 1))
            })?;
            let key = ScaleKey::parse(name.trim())?;
            let scale: f64 = value.trim().parse().map_err(|_| {
                Error::Parse(format!("normalizer line {}: bad scale {value:?}", lineno + 1))
            })?;
            if !scale.is_finite() || scale <= 0.0 {
                return Err(Error::Parse(format!(
                    "normalizer line {}: scale must be positive, got {scale}",
                    lineno + 1
                )));
            }
            if scales.insert(key, scale).is_some() {
                return Err(Error::Parse(format!(
                    "normalizer line {}: duplicate key {name:?}",
                    lineno + 1
                )));
            }
        }
        if scales.is_empty() {
            return Err(Error::Parse("normalizer file has no scales".into()));
        }
        Ok(Normalizer { scales })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Normalizer> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(values: &[f64]) -> ScalarField {
        ScalarField::new(1, values.len(), values.to_vec()).unwrap()
    }

    #[test]
    fn scale_is_abs_max_over_training() {
        let n = fit_normalizer(&[field(&[-2.0, 4.0])], &[]).unwrap();
        assert_eq!(n.scale(ScaleKey::Target).unwrap(), 4.0);
        let n = fit_normalizer(&[field(&[10.0, 10.0])], &[]).unwrap();
        assert_eq!(n.scale(ScaleKey::Target).unwrap(), 10.0);
        let n = fit_normalizer(&[field(&[3.0]), field(&[-7.0])], &[]).unwrap();
        assert_eq!(n.scale(ScaleKey::Target).unwrap(), 7.0);
    }

    #[test]
    fn binary_kinds_pin_scale_one() {
        // Even an all-zero location mask (no sensors) is legal and scales by 1.
        let n = fit_normalizer(
            &[field(&[2.0])],
            &[
                (ChannelKind::SparseLocation, vec![field(&[0.0, 0.0])]),
                (ChannelKind::LandMask, vec![field(&[1.0, 0.0])]),
            ],
        )
        .unwrap();
        assert_eq!(n.scale(ScaleKey::Channel(ChannelKind::SparseLocation)).unwrap(), 1.0);
        assert_eq!(n.scale(ScaleKey::Channel(ChannelKind::LandMask)).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_training_sets_are_rejected() {
        assert!(matches!(
            fit_normalizer(&[], &[]),
            Err(Error::EmptyTrainingSet)
        ));
        assert!(matches!(
            fit_normalizer(&[field(&[0.0, 0.0])], &[]),
            Err(Error::ZeroScale(_))
        ));
        assert!(matches!(
            fit_normalizer(
                &[field(&[1.0])],
                &[(ChannelKind::Voronoi, vec![field(&[0.0])])]
            ),
            Err(Error::ZeroScale(_))
        ));
    }

    #[test]
    fn normalize_divides_denormalize_multiplies() {
        let n = fit_normalizer(&[field(&[-2.0, 4.0])], &[]).unwrap();
        let x = field(&[-2.0, 1.0, 4.0]);
        let z = n.normalize(&x, ScaleKey::Target).unwrap();
        assert_eq!(z.values(), &[-0.5, 0.25, 1.0]);
        let back = n.denormalize(&z, ScaleKey::Target).unwrap();
        for (a, b) in back.values().iter().zip(x.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        // Zero stays zero; the scale maps the extreme to exactly 1.
        assert_eq!(n.normalize(&field(&[0.0]), ScaleKey::Target).unwrap().values(), &[0.0]);
    }

    #[test]
    fn unknown_kind_is_an_error() {
        let n = fit_normalizer(&[field(&[1.0])], &[]).unwrap();
        assert!(matches!(
            n.scale(ScaleKey::Channel(ChannelKind::Voronoi)),
            Err(Error::UnknownScaleKind(_))
        ));
    }

    #[test]
    fn training_pixels_land_in_unit_interval() {
        let frames = vec![field(&[-3.0, 2.0]), field(&[1.0, 2.5])];
        let n = fit_normalizer(&frames, &[]).unwrap();
        for f in &frames {
            let z = n.normalize(f, ScaleKey::Target).unwrap();
            assert!(z.values().iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let n = fit_normalizer(
            &[field(&[0.1234567890123])],
            &[(ChannelKind::DtSensor, vec![field(&[17.25])])],
        )
        .unwrap();
        let text = n.to_text();
        let back = Normalizer::from_text(&text).unwrap();
        assert_eq!(back, n);
        // Deterministic layout: sorted keys, one per line.
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert!(Normalizer::from_text("").is_err());
        assert!(Normalizer::from_text("no equals sign").is_err());
        assert!(Normalizer::from_text("target=abc").is_err());
        assert!(Normalizer::from_text("target=-1.0").is_err());
        assert!(Normalizer::from_text("mystery_kind=2.0").is_err());
        assert!(Normalizer::from_text("target=1\ntarget=2").is_err());
    }

    #[test]
    fn identity_passes_through() {
        let n = Normalizer::identity([ScaleKey::Channel(ChannelKind::Voronoi)]);
        let x = field(&[123.0, -7.0]);
        assert_eq!(n.normalize(&x, ScaleKey::Channel(ChannelKind::Voronoi)).unwrap(), x);
        assert_eq!(n.normalize(&x, ScaleKey::Target).unwrap(), x);
    }
}
