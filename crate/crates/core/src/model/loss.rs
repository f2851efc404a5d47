//! Masked mean-squared-error loss and its exact reverse-mode gradients.

use crate::error::{Error, Result};
use crate::field::{SampleStack, ScalarField};
use crate::model::conv::LayerBuf;
use crate::model::net::ConvNet;
use crate::model::tensor::Tensor;

/// Σ over mask=1 pixels of (pred − target)² divided by the count of those
/// pixels. Pixels with mask 0 contribute nothing, in value or gradient.
pub fn masked_mse(pred: &ScalarField, target: &ScalarField, mask: &[u8]) -> Result<f64> {
    pred.same_shape(target)?;
    masked_mse_slices(pred.values(), target.values(), mask)
}

pub(crate) fn masked_mse_slices(pred: &[f64], target: &[f64], mask: &[u8]) -> Result<f64> {
    if mask.len() != pred.len() {
        return Err(Error::BadMask(format!(
            "loss mask has {} entries, field has {}",
            mask.len(),
            pred.len()
        )));
    }
    if let Some(pos) = mask.iter().position(|&m| m > 1) {
        return Err(Error::BadMask(format!(
            "entry {} at flat index {pos} is neither 0 nor 1",
            mask[pos]
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for ((&p, &t), &m) in pred.iter().zip(target).zip(mask) {
        if m == 1 {
            let d = p - t;
            total += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(total / count as f64)
}

/// Per-layer parameter gradients, in network layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub(crate) layers: Vec<LayerBuf>,
}

impl Gradients {
    pub(crate) fn zeros_like(net: &ConvNet) -> Gradients {
        Gradients {
            layers: net.layers().iter().map(|l| l.zero_buf()).collect(),
        }
    }

    pub(crate) fn add(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w *= factor;
            }
            for b in &mut layer.bias {
                *b *= factor;
            }
        }
    }

    /// Read one gradient by flat index, mirroring the network's parameter
    /// order (layer by layer, weights then bias).
    pub fn get_flat(&self, mut index: usize) -> f64 {
        for layer in &self.layers {
            if index < layer.weights.len() {
                return layer.weights[index];
            }
            index -= layer.weights.len();
            if index < layer.bias.len() {
                return layer.bias[index];
            }
            index -= layer.bias.len();
        }
        panic!("gradient index out of range");
    }
}

/// Forward the sample, evaluate the masked loss, and backpropagate: the
/// returned gradients are the exact derivatives of the loss with respect to
/// every weight and bias.
pub fn loss_and_gradients(net: &ConvNet, stack: &SampleStack) -> Result<(f64, Gradients)> {
    if stack.depth() != net.input_channels() {
        return Err(Error::InvalidArgument(format!(
            "network takes {} input channels, sample has {}",
            net.input_channels(),
            stack.depth()
        )));
    }
    let acts = net.forward_trace(Tensor::from_stack(stack))?;
    let pred = acts.last().expect("nonempty");
    let mask = stack.loss_mask();
    let loss = masked_mse_slices(pred.channel(0), stack.target().values(), mask)?;

    // Seed: d(loss)/d(pred) = 2(pred − target)/m on masked-in pixels.
    let m = mask.iter().filter(|&&b| b == 1).count() as f64;
    let mut g = Tensor::zeros(1, pred.height, pred.width);
    {
        let gd = g.channel_mut(0);
        for (i, ((&p, &t), &keep)) in pred
            .channel(0)
            .iter()
            .zip(stack.target().values())
            .zip(mask)
            .enumerate()
        {
            if keep == 1 {
                gd[i] = 2.0 * (p - t) / m;
            }
        }
    }

    let mut grads = Gradients::zeros_like(net);
    for l in (0..net.layers().len()).rev() {
        let (layer_grad, mut gin) = net.layers()[l].backward(&acts[l], &g)?;
        grads.layers[l] = layer_grad;
        if l > 0 {
            // acts[l] is the ReLU output of layer l−1: zero there means the
            // unit was clamped, so no gradient flows through it.
            for (gi, &a) in gin.data.iter_mut().zip(&acts[l].data) {
                if a <= 0.0 {
                    *gi = 0.0;
                }
            }
            g = gin;
        }
    }
    Ok((loss, grads))
}
