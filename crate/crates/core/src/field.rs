//! Dense scalar fields, sensor sets, and assembled model samples.

use crate::error::{Error, Result};
use crate::geometry::GridGeometry;

/// The kinds of input channel the pipeline knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelKind {
    /// Nearest-sensor fill of the whole grid.
    Voronoi,
    /// 1 at sensor pixels, 0 elsewhere.
    SparseLocation,
    /// Distance to the nearest sensor.
    DtSensor,
    /// 1 where a value should be predicted, 0 where it is masked out.
    LandMask,
    /// Distance to the nearest masked-out pixel.
    DtLand,
    /// Sensor readings at sensor pixels, climatology elsewhere.
    FilledSparse,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 6] = [
        ChannelKind::Voronoi,
        ChannelKind::SparseLocation,
        ChannelKind::DtSensor,
        ChannelKind::LandMask,
        ChannelKind::DtLand,
        ChannelKind::FilledSparse,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::Voronoi => "voronoi",
            ChannelKind::SparseLocation => "sparse_location",
            ChannelKind::DtSensor => "dt_sensor",
            ChannelKind::LandMask => "land_mask",
            ChannelKind::DtLand => "dt_land",
            ChannelKind::FilledSparse => "filled_sparse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown channel kind {s:?}")))
    }

    /// Binary 0/1 channels keep a fixed normalization scale of 1.
    pub fn is_binary_mask(&self) -> bool {
        matches!(self, ChannelKind::SparseLocation | ChannelKind::LandMask)
    }
}

fn check_mask(mask: &[u8], len: usize) -> Result<()> {
    if mask.len() != len {
        return Err(Error::BadMask(format!(
            "mask has {} entries, grid has {len} pixels",
            mask.len()
        )));
    }
    if let Some(pos) = mask.iter().position(|&m| m > 1) {
        return Err(Error::BadMask(format!(
            "entry {} at flat index {pos} is neither 0 nor 1",
            mask[pos]
        )));
    }
    Ok(())
}

/// A dense 2-D grid of f64 values in row-major order, with an optional
/// validity mask (1 = location to be predicted, 0 = masked out) and the
/// geometry distances on this grid use.
///
/// Fields are immutable once built; every transformation returns a new field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    values: Vec<f64>,
    valid_mask: Option<Vec<u8>>,
    geometry: GridGeometry,
}

impl ScalarField {
    /// Build a field over a planar grid. All values must be finite.
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        let geometry = GridGeometry::planar(height, width)?;
        Self::with_geometry_and_values(geometry, values)
    }

    /// Build a field with an explicit geometry (shape comes from the geometry).
    pub fn with_geometry_and_values(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        let (height, width) = (geometry.height(), geometry.width());
        if values.len() != height * width {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for a {height}x{width} grid, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ScalarField {
            height,
            width,
            values,
            valid_mask: None,
            geometry,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::new(height, width, values)
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::constant(height, width, 0.0)
    }

    /// Attach a validity mask (consumes and returns the field).
    pub fn with_valid_mask(mut self, mask: Vec<u8>) -> Result<Self> {
        check_mask(&mask, self.values.len())?;
        self.valid_mask = Some(mask);
        Ok(self)
    }

    /// Replace the geometry; its shape must match the field.
    pub fn with_geometry(mut self, geometry: GridGeometry) -> Result<Self> {
        if geometry.height() != self.height || geometry.width() != self.width {
            return Err(Error::ShapeMismatch {
                expected_height: self.height,
                expected_width: self.width,
                height: geometry.height(),
                width: geometry.width(),
            });
        }
        self.geometry = geometry;
        Ok(self)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.idx(row, col)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_mask(&self) -> Option<&[u8]> {
        self.valid_mask.as_deref()
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// True where the pixel participates in prediction (no mask = everywhere).
    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        match &self.valid_mask {
            Some(m) => m[row * self.width + col] == 1,
            None => true,
        }
    }

    /// Pixel-wise transform; keeps mask and geometry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        let mut out = Self::with_geometry_and_values(self.geometry, values)?;
        out.valid_mask = self.valid_mask.clone();
        Ok(out)
    }

    /// Same shape, new values; keeps mask and geometry.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = Self::with_geometry_and_values(self.geometry, values)?;
        out.valid_mask = self.valid_mask.clone();
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn same_shape(&self, other: &ScalarField) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected_height: self.height,
                expected_width: self.width,
                height: other.height,
                width: other.width,
            });
        }
        Ok(())
    }
}

/// Sensor locations on a grid, optionally with the values read there.
/// Locations are unique, in bounds, and keep their construction order — ties
/// in downstream nearest-sensor queries resolve to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSet {
    height: usize,
    width: usize,
    locations: Vec<(usize, usize)>,
    values: Option<Vec<f64>>,
}

impl SensorSet {
    pub fn new(height: usize, width: usize, locations: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(locations.len());
        for &(row, col) in &locations {
            if row >= height || col >= width {
                return Err(Error::OutOfBounds { row, col });
            }
            if !seen.insert((row, col)) {
                return Err(Error::DuplicateSensor { row, col });
            }
        }
        Ok(SensorSet {
            height,
            width,
            locations,
            values: None,
        })
    }

    /// Attach explicit readings, one per location.
    pub fn with_values(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.locations.len() {
            return Err(Error::ValueCountMismatch {
                sensors: self.locations.len(),
                values: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        self.values = Some(values);
        Ok(self)
    }

    /// Read values off a field at this set's locations. When the field has a
    /// validity mask every sensor must sit on a valid pixel.
    pub fn sampled_from(&self, field: &ScalarField) -> Result<SensorSet> {
        if field.height() != self.height || field.width() != self.width {
            return Err(Error::ShapeMismatch {
                expected_height: self.height,
                expected_width: self.width,
                height: field.height(),
                width: field.width(),
            });
        }
        self.require_on_valid(field)?;
        let values = self.locations.iter().map(|&(r, c)| field.get(r, c)).collect();
        let mut out = self.clone();
        out.values = Some(values);
        Ok(out)
    }

    /// Error out if any sensor sits on a masked-out pixel of `field`.
    pub fn require_on_valid(&self, field: &ScalarField) -> Result<()> {
        for &(row, col) in &self.locations {
            if !field.is_valid(row, col) {
                return Err(Error::SensorOffValid { row, col });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn locations(&self) -> &[(usize, usize)] {
        &self.locations
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }
}

/// One training/evaluation sample: input channels in recipe order, the target
/// field, and the binary loss mask (1 = pixel contributes to the loss).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStack {
    channels: Vec<ScalarField>,
    kinds: Vec<ChannelKind>,
    target: ScalarField,
    loss_mask: Vec<u8>,
}

impl SampleStack {
    pub fn new(
        channels: Vec<ScalarField>,
        kinds: Vec<ChannelKind>,
        target: ScalarField,
        loss_mask: Vec<u8>,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidArgument("sample has no input channels".into()));
        }
        if channels.len() != kinds.len() {
            return Err(Error::InvalidArgument(format!(
                "{} channels but {} kinds",
                channels.len(),
                kinds.len()
            )));
        }
        let mut sorted = kinds.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != kinds.len() {
            return Err(Error::InvalidArgument("duplicate channel kind in sample".into()));
        }
        for ch in &channels {
            target.same_shape(ch)?;
        }
        check_mask(&loss_mask, target.len())?;
        Ok(SampleStack {
            channels,
            kinds,
            target,
            loss_mask,
        })
    }

    pub fn channels(&self) -> &[ScalarField] {
        &self.channels
    }

    pub fn kinds(&self) -> &[ChannelKind] {
        &self.kinds
    }

    pub fn target(&self) -> &ScalarField {
        &self.target
    }

    pub fn loss_mask(&self) -> &[u8] {
        &self.loss_mask
    }

    pub fn height(&self) -> usize {
        self.target.height()
    }

    pub fn width(&self) -> usize {
        self.target.width()
    }

    /// Number of input channels.
    pub fn depth(&self) -> usize {
        self.channels.len()
    }
}
