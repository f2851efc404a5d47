//! Sample assembly: a frame plus a sensor placement becomes a model sample.
//!
//! A [`SampleRecipe`] names the input channels in order and whether the loss
//! is masked. [`assemble_sample`] builds one sample from scratch;
//! [`AssembledSet`] serves a whole frames × placements grid of samples
//! lazily, caching the channels that do not depend on the frame so epochs
//! over long sequences stay cheap in memory.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::{ChannelKind, SampleStack, ScalarField, SensorSet};
use crate::normalize::{Normalizer, NormalizerFit, ScaleKey};
use crate::tessellation;

/// Input channel list (order preserved) plus the loss-masking switch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecipe {
    channels: Vec<ChannelKind>,
    masked_loss: bool,
}

impl SampleRecipe {
    /// A recipe must name at least one channel, no channel twice, and may
    /// carry the sensor-location mask or the sensor distance transform but
    /// not both — they encode the same information two ways.
    pub fn new(channels: Vec<ChannelKind>, masked_loss: bool) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidArgument("recipe names no channels".into()));
        }
        let mut sorted = channels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != channels.len() {
            return Err(Error::InvalidArgument("recipe repeats a channel".into()));
        }
        if channels.contains(&ChannelKind::SparseLocation)
            && channels.contains(&ChannelKind::DtSensor)
        {
            return Err(Error::InvalidArgument(
                "recipe mixes sparse_location with dt_sensor; pick one".into(),
            ));
        }
        Ok(SampleRecipe {
            channels,
            masked_loss,
        })
    }

    /// Parse a comma-separated channel list, e.g. "voronoi,dt_sensor".
    pub fn parse(list: &str, masked_loss: bool) -> Result<Self> {
        let channels = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(ChannelKind::parse)
            .collect::<Result<Vec<_>>>()?;
        SampleRecipe::new(channels, masked_loss)
    }

    pub fn channels(&self) -> &[ChannelKind] {
        &self.channels
    }

    pub fn masked_loss(&self) -> bool {
        self.masked_loss
    }

    /// The channel list as config text.
    pub fn channel_list(&self) -> String {
        self.channels
            .iter()
            .map(|k| k.name())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Every normalization key a sample built from this recipe touches.
    pub fn scale_keys(&self) -> Vec<ScaleKey> {
        self.channels
            .iter()
            .map(|&k| ScaleKey::Channel(k))
            .chain(std::iter::once(ScaleKey::Target))
            .collect()
    }
}

/// Per-pixel mean over a set of same-shaped frames; geometry and validity
/// mask are carried over from the first frame.
pub fn climatology(frames: &[ScalarField]) -> Result<ScalarField> {
    let first = frames.first().ok_or(Error::EmptyTrainingSet)?;
    let mut sums = vec![0.0; first.len()];
    for frame in frames {
        first.same_shape(frame)?;
        for (acc, &v) in sums.iter_mut().zip(frame.values()) {
            *acc += v;
        }
    }
    let n = frames.len() as f64;
    for acc in &mut sums {
        *acc /= n;
    }
    first.with_values(sums)
}

/// The frame's validity mask as a binary field (all ones when unmasked).
fn land_field(frame: &ScalarField) -> Result<ScalarField> {
    let values = match frame.valid_mask() {
        Some(mask) => mask.iter().map(|&m| m as f64).collect(),
        None => vec![1.0; frame.len()],
    };
    frame.with_values(values)
}

/// Build one raw (unnormalized) channel of the given kind. The sensor set
/// must carry values for reading-dependent kinds; `climatology` is required
/// by the filled-sparse kind only.
pub fn build_channel(
    kind: ChannelKind,
    frame: &ScalarField,
    sensors: &SensorSet,
    climatology: Option<&ScalarField>,
) -> Result<ScalarField> {
    let geometry = frame.geometry();
    match kind {
        ChannelKind::Voronoi => tessellation::voronoi_fill(geometry, sensors, frame.valid_mask()),
        ChannelKind::SparseLocation => tessellation::sparse_location_mask(geometry, sensors),
        ChannelKind::DtSensor => tessellation::dt_sensor_mask(geometry, sensors),
        ChannelKind::LandMask => land_field(frame),
        ChannelKind::DtLand => tessellation::dt_land_mask(geometry, &land_field(frame)?),
        ChannelKind::FilledSparse => {
            let clim = climatology.ok_or_else(|| {
                Error::InvalidArgument("filled_sparse channel needs a climatology field".into())
            })?;
            frame.same_shape(clim)?;
            tessellation::filled_sparse_mask(clim, sensors)
        }
    }
}

/// Assemble one sample: read the frame at the placement's locations, build
/// each recipe channel, normalize channels and target per kind, and attach
/// the loss mask (the frame's validity mask when masked loss is on,
/// all-ones otherwise).
pub fn assemble_sample(
    frame: &ScalarField,
    placement: &SensorSet,
    recipe: &SampleRecipe,
    normalizer: &Normalizer,
    climatology: Option<&ScalarField>,
) -> Result<SampleStack> {
    let sensors = placement.sampled_from(frame)?;
    let mut channels = Vec::with_capacity(recipe.channels.len());
    for &kind in &recipe.channels {
        let raw = build_channel(kind, frame, &sensors, climatology)?;
        channels.push(normalizer.normalize(&raw, ScaleKey::Channel(kind))?);
    }
    let target = normalizer.normalize(frame, ScaleKey::Target)?;
    let loss_mask = loss_mask_for(frame, recipe);
    SampleStack::new(channels, recipe.channels.clone(), target, loss_mask)
}

fn loss_mask_for(frame: &ScalarField, recipe: &SampleRecipe) -> Vec<u8> {
    match (recipe.masked_loss, frame.valid_mask()) {
        (true, Some(mask)) => mask.to_vec(),
        _ => vec![1; frame.len()],
    }
}

/// A frames × placements grid of samples, assembled on demand.
///
/// Sample `i` pairs frame `i / placements` with placement `i % placements`.
/// Channels that do not depend on the frame values (locations, distance
/// transforms, masks) are built and normalized once per placement; the
/// nearest-sensor ownership map is cached so the per-frame fill is a single
/// table lookup per pixel.
#[derive(Debug, Clone)]
pub struct AssembledSet {
    frames: Vec<ScalarField>,
    placements: Vec<SensorSet>,
    recipe: SampleRecipe,
    normalizer: Normalizer,
    climatology: Option<ScalarField>,
    static_channels: Vec<BTreeMap<ChannelKind, ScalarField>>,
    ownership: Vec<Vec<usize>>,
}

impl AssembledSet {
    pub fn new(
        frames: Vec<ScalarField>,
        placements: Vec<SensorSet>,
        recipe: SampleRecipe,
        normalizer: Normalizer,
        climatology: Option<ScalarField>,
    ) -> Result<Self> {
        let first = frames.first().ok_or_else(|| {
            Error::InvalidArgument("assembled set needs at least one frame".into())
        })?;
        if placements.is_empty() {
            return Err(Error::InvalidArgument(
                "assembled set needs at least one placement".into(),
            ));
        }
        for frame in &frames {
            first.same_shape(frame)?;
            if frame.geometry() != first.geometry() {
                return Err(Error::InvalidArgument(
                    "frames in one set must share a geometry".into(),
                ));
            }
            if frame.valid_mask() != first.valid_mask() {
                return Err(Error::InvalidArgument(
                    "frames in one set must share a validity mask".into(),
                ));
            }
        }
        if recipe.channels.contains(&ChannelKind::FilledSparse) {
            let clim = climatology.as_ref().ok_or_else(|| {
                Error::InvalidArgument("filled_sparse channel needs a climatology field".into())
            })?;
            first.same_shape(clim)?;
        }

        let needs_voronoi = recipe.channels.contains(&ChannelKind::Voronoi);
        let mut static_channels = Vec::with_capacity(placements.len());
        let mut ownership = Vec::with_capacity(placements.len());
        for placement in &placements {
            placement.require_on_valid(first)?;
            // Probe with the first frame: any structural problem (shape,
            // empty sensor set for a distance transform, no land pixel)
            // surfaces here instead of mid-epoch.
            let sensors = placement.sampled_from(first)?;
            let mut cache = BTreeMap::new();
            for &kind in &recipe.channels {
                match kind {
                    ChannelKind::Voronoi | ChannelKind::FilledSparse => {
                        build_channel(kind, first, &sensors, climatology.as_ref())?;
                    }
                    _ => {
                        let raw = build_channel(kind, first, &sensors, None)?;
                        cache.insert(kind, normalizer.normalize(&raw, ScaleKey::Channel(kind))?);
                    }
                }
            }
            static_channels.push(cache);
            ownership.push(if needs_voronoi {
                tessellation::voronoi_assignment(first.geometry(), placement)?
            } else {
                Vec::new()
            });
        }
        Ok(AssembledSet {
            frames,
            placements,
            recipe,
            normalizer,
            climatology,
            static_channels,
            ownership,
        })
    }

    pub fn frames(&self) -> &[ScalarField] {
        &self.frames
    }

    pub fn placements(&self) -> &[SensorSet] {
        &self.placements
    }

    pub fn recipe(&self) -> &SampleRecipe {
        &self.recipe
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn len(&self) -> usize {
        self.frames.len() * self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Map a sample index back to its (frame index, placement index) pair.
    pub fn decompose(&self, index: usize) -> Result<(usize, usize)> {
        if index >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "sample index {index} out of range for {} samples",
                self.len()
            )));
        }
        Ok((index / self.placements.len(), index % self.placements.len()))
    }

    /// Assemble sample `index`. Equal, bit for bit, to calling
    /// [`assemble_sample`] on the corresponding frame and placement.
    pub fn get(&self, index: usize) -> Result<SampleStack> {
        let (f, p) = self.decompose(index)?;
        let frame = &self.frames[f];
        let sensors = self.placements[p].sampled_from(frame)?;
        let readings = sensors.values().expect("sampled sensors carry values");
        let mut channels = Vec::with_capacity(self.recipe.channels.len());
        for &kind in &self.recipe.channels {
            let ch = match kind {
                ChannelKind::Voronoi => {
                    let filled: Vec<f64> =
                        self.ownership[p].iter().map(|&s| readings[s]).collect();
                    let raw = ScalarField::with_geometry_and_values(*frame.geometry(), filled)?;
                    self.normalizer.normalize(&raw, ScaleKey::Channel(kind))?
                }
                ChannelKind::FilledSparse => {
                    let clim = self.climatology.as_ref().expect("checked at construction");
                    let raw = tessellation::filled_sparse_mask(clim, &sensors)?;
                    self.normalizer.normalize(&raw, ScaleKey::Channel(kind))?
                }
                _ => self.static_channels[p][&kind].clone(),
            };
            channels.push(ch);
        }
        let target = self.normalizer.normalize(frame, ScaleKey::Target)?;
        let loss_mask = loss_mask_for(frame, &self.recipe);
        SampleStack::new(channels, self.recipe.channels.clone(), target, loss_mask)
    }
}

/// Serves assembled samples by index; the training loop and evaluation both
/// draw through this so prebuilt lists and lazy sets interchange freely.
pub trait SampleProvider {
    fn len(&self) -> usize;
    fn get(&self, index: usize) -> Result<SampleStack>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl SampleProvider for AssembledSet {
    fn len(&self) -> usize {
        AssembledSet::len(self)
    }

    fn get(&self, index: usize) -> Result<SampleStack> {
        AssembledSet::get(self, index)
    }
}

impl SampleProvider for [SampleStack] {
    fn len(&self) -> usize {
        <[SampleStack]>::len(self)
    }

    fn get(&self, index: usize) -> Result<SampleStack> {
        self.get(index).cloned().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "sample index {index} out of range for {} samples",
                <[SampleStack]>::len(self)
            ))
        })
    }
}

impl SampleProvider for Vec<SampleStack> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn get(&self, index: usize) -> Result<SampleStack> {
        SampleProvider::get(self.as_slice(), index)
    }
}

/// Fit normalization scales on a training set: every channel image the
/// recipe would build for every (frame, placement) pair, plus every target
/// frame, streamed through the fitter so nothing is held in memory.
pub fn fit_for_training(
    frames: &[ScalarField],
    placements: &[SensorSet],
    recipe: &SampleRecipe,
    climatology: Option<&ScalarField>,
) -> Result<Normalizer> {
    let identity = Normalizer::identity(recipe.scale_keys());
    let set = AssembledSet::new(
        frames.to_vec(),
        placements.to_vec(),
        recipe.clone(),
        identity,
        climatology.cloned(),
    )?;
    let mut fit = NormalizerFit::new();
    for frame in frames {
        fit.add_target(frame);
    }
    for i in 0..AssembledSet::len(&set) {
        let stack = set.get(i)?;
        for (ch, &kind) in stack.channels().iter().zip(stack.kinds()) {
            fit.add_channel(kind, ch);
        }
    }
    fit.finish()
}
