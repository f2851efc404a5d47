//! The convolutional regressor: a stack of same-padding conv layers with
//! ReLU between them and a linear head producing one output channel.

use crate::dataset::rng::Rng;
use crate::error::{Error, Result};
use crate::field::{SampleStack, ScalarField};
use crate::model::conv::ConvLayer;
use crate::model::tensor::Tensor;

pub const DEFAULT_LAYERS: usize = 8;
pub const DEFAULT_FEATURES: usize = 48;
pub const DEFAULT_KERNEL: usize = 7;
pub const DEFAULT_INIT_SEED: u64 = 1;

/// Architecture description: `layers` convolutions deep, `features` maps on
/// every hidden layer, square `kernel` taps, one output channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetShape {
    pub input_channels: usize,
    pub layers: usize,
    pub features: usize,
    pub kernel: usize,
}

impl NetShape {
    /// The stock architecture for a given number of input channels.
    pub fn with_input(input_channels: usize) -> NetShape {
        NetShape {
            input_channels,
            layers: DEFAULT_LAYERS,
            features: DEFAULT_FEATURES,
            kernel: DEFAULT_KERNEL,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.layers == 0 || self.features == 0 {
            return Err(Error::InvalidArgument(format!(
                "network shape must be positive in every dimension: {self:?}"
            )));
        }
        Ok(())
    }

    /// (in, out) channel counts per layer: input → features → … → 1.
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        (0..self.layers)
            .map(|l| {
                let inputs = if l == 0 { self.input_channels } else { self.features };
                let outputs = if l == self.layers - 1 { 1 } else { self.features };
                (inputs, outputs)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvNet {
    layers: Vec<ConvLayer>,
}

impl ConvNet {
    /// Fresh network with fan-in-scaled uniform weights (±√(6/fan_in)) and
    /// zero biases, drawn from the deterministic generator seeded `seed`.
    pub fn init(shape: NetShape, seed: u64) -> Result<ConvNet> {
        shape.validate()?;
        let mut rng = Rng::new(seed);
        let mut layers = Vec::with_capacity(shape.layers);
        for (inputs, outputs) in shape.layer_dims() {
            let mut layer = ConvLayer::zeros(inputs, outputs, shape.kernel)?;
            let fan_in = (inputs * shape.kernel * shape.kernel) as f64;
            let bound = (6.0 / fan_in).sqrt();
            for w in layer.weights_mut() {
                *w = bound * (2.0 * rng.next_f64() - 1.0);
            }
            layers.push(layer);
        }
        Ok(ConvNet { layers })
    }

    /// Rebuild a network from explicit layers (checkpoint loading): channel
    /// counts must chain and the head must emit exactly one channel.
    pub fn from_layers(layers: Vec<ConvLayer>) -> Result<ConvNet> {
        let last = layers.last().ok_or_else(|| {
            Error::InvalidArgument("network needs at least one layer".into())
        })?;
        if last.out_channels() != 1 {
            return Err(Error::InvalidArgument(format!(
                "network head must emit one channel, emits {}",
                last.out_channels()
            )));
        }
        for pair in layers.windows(2) {
            if pair[0].out_channels() != pair[1].in_channels() {
                return Err(Error::InvalidArgument(format!(
                    "layer emits {} channels but the next expects {}",
                    pair[0].out_channels(),
                    pair[1].in_channels()
                )));
            }
        }
        Ok(ConvNet { layers })
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [ConvLayer] {
        &mut self.layers
    }

    pub fn input_channels(&self) -> usize {
        self.layers[0].in_channels()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights().len() + l.bias().len())
            .sum()
    }

    /// Read one parameter by flat index: layer by layer, weights then bias.
    pub fn get_param(&self, mut index: usize) -> f64 {
        for layer in &self.layers {
            if index < layer.weights().len() {
                return layer.weights()[index];
            }
            index -= layer.weights().len();
            if index < layer.bias().len() {
                return layer.bias()[index];
            }
            index -= layer.bias().len();
        }
        panic!("parameter index out of range");
    }

    /// Write one parameter by flat index (see [`ConvNet::get_param`]).
    pub fn set_param(&mut self, mut index: usize, value: f64) {
        for layer in &mut self.layers {
            if index < layer.weights().len() {
                layer.weights_mut()[index] = value;
                return;
            }
            index -= layer.weights().len();
            if index < layer.bias().len() {
                layer.bias_mut()[index] = value;
                return;
            }
            index -= layer.bias().len();
        }
        panic!("parameter index out of range");
    }

    /// Forward pass keeping every layer's (post-activation) output; entry 0
    /// is the input itself, the last entry is the prediction.
    pub(crate) fn forward_trace(&self, input: Tensor) -> Result<Vec<Tensor>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input);
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(acts.last().expect("nonempty"))?;
            if l + 1 < self.layers.len() {
                for v in &mut z.data {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(z);
        }
        Ok(acts)
    }

    pub(crate) fn forward_tensor(&self, input: Tensor) -> Result<Tensor> {
        let mut acts = self.forward_trace(input)?;
        Ok(acts.pop().expect("nonempty"))
    }

    /// Predict the (normalized) field for one sample. The prediction carries
    /// the sample's geometry, no validity mask.
    pub fn forward_field(&self, stack: &SampleStack) -> Result<ScalarField> {
        if stack.depth() != self.input_channels() {
            return Err(Error::InvalidArgument(format!(
                "network takes {} input channels, sample has {}",
                self.input_channels(),
                stack.depth()
            )));
        }
        let out = self.forward_tensor(Tensor::from_stack(stack))?;
        ScalarField::with_geometry_and_values(*stack.target().geometry(), out.data)
    }
}
