//! One 2-D convolution layer: cross-correlation with zero same-padding,
//! stride 1, plus a per-output-channel bias.
//!
//! Forward and backward both walk the kernel taps in the outer loops and
//! sweep contiguous pixel rows in the inner loop, so the hot path is a
//! fused multiply-add over slices rather than a gather per pixel.

use crate::error::{Error, Result};
use crate::model::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    /// Indexed [out][in][ky][kx].
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Gradient (or any per-parameter buffer) shaped like one layer.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LayerBuf {
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

fn check_dims(in_channels: usize, out_channels: usize, kernel: usize) -> Result<()> {
    if in_channels == 0 || out_channels == 0 {
        return Err(Error::InvalidArgument(
            "convolution layer needs at least one input and one output channel".into(),
        ));
    }
    if kernel == 0 || kernel.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "kernel size must be odd so same-padding is symmetric, got {kernel}"
        )));
    }
    Ok(())
}

impl ConvLayer {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Result<ConvLayer> {
        check_dims(in_channels, out_channels, kernel)?;
        Ok(ConvLayer {
            in_channels,
            out_channels,
            kernel,
            weights: vec![0.0; out_channels * in_channels * kernel * kernel],
            bias: vec![0.0; out_channels],
        })
    }

    /// Build a layer from explicit parameters (checkpoint loading).
    pub fn with_params(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<ConvLayer> {
        let mut layer = ConvLayer::zeros(in_channels, out_channels, kernel)?;
        if weights.len() != layer.weights.len() || bias.len() != layer.bias.len() {
            return Err(Error::InvalidArgument(format!(
                "layer {in_channels}->{out_channels} k{kernel} takes {}+{} parameters, got {}+{}",
                layer.weights.len(),
                layer.bias.len(),
                weights.len(),
                bias.len()
            )));
        }
        if let Some(index) = weights
            .iter()
            .chain(&bias)
            .position(|v| !v.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        layer.weights = weights;
        layer.bias = bias;
        Ok(layer)
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub(crate) fn zero_buf(&self) -> LayerBuf {
        LayerBuf {
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }

    fn widx(&self, oc: usize, ic: usize, ky: usize, kx: usize) -> usize {
        ((oc * self.in_channels + ic) * self.kernel + ky) * self.kernel + kx
    }

    /// In-bounds row/column span for a kernel tap shifted by (dy, dx): the
    /// output pixels (y, x) with y+dy and x+dx inside the image. Zero
    /// padding means out-of-span taps contribute nothing.
    fn span(shift: isize, extent: usize) -> (usize, usize) {
        let lo = (-shift).max(0) as usize;
        let hi = (extent as isize - shift.max(0)).max(0) as usize;
        (lo, hi.max(lo))
    }

    pub(crate) fn forward(&self, input: &Tensor) -> Result<Tensor> {
        input.expect_shape(self.in_channels, "convolution input")?;
        let (h, w) = (input.height, input.width);
        let r = (self.kernel / 2) as isize;
        let mut out = Tensor::zeros(self.out_channels, h, w);
        for oc in 0..self.out_channels {
            let out_ch = out.channel_mut(oc);
            out_ch.fill(self.bias[oc]);
            for ic in 0..self.in_channels {
                let in_ch = input.channel(ic);
                for ky in 0..self.kernel {
                    let dy = ky as isize - r;
                    let (y0, y1) = Self::span(dy, h);
                    for kx in 0..self.kernel {
                        let dx = kx as isize - r;
                        let (x0, x1) = Self::span(dx, w);
                        if x0 >= x1 {
                            continue;
                        }
                        let weight = self.weights[self.widx(oc, ic, ky, kx)];
                        for y in y0..y1 {
                            let src = ((y as isize + dy) as usize * w) as isize + dx;
                            let dst = y * w;
                            let in_row = &in_ch[(src + x0 as isize) as usize
                                ..(src + x1 as isize) as usize];
                            let out_row = &mut out_ch[dst + x0..dst + x1];
                            for (o, &i) in out_row.iter_mut().zip(in_row) {
                                *o += weight * i;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Reverse-mode step: given the layer input and the loss gradient at the
    /// output, return the parameter gradient and the loss gradient at the
    /// input.
    pub(crate) fn backward(&self, input: &Tensor, gout: &Tensor) -> Result<(LayerBuf, Tensor)> {
        input.expect_shape(self.in_channels, "convolution input")?;
        gout.expect_shape(self.out_channels, "convolution output gradient")?;
        let (h, w) = (input.height, input.width);
        let r = (self.kernel / 2) as isize;
        let mut grad = self.zero_buf();
        let mut gin = Tensor::zeros(self.in_channels, h, w);
        for oc in 0..self.out_channels {
            let g_ch = gout.channel(oc);
            grad.bias[oc] = g_ch.iter().sum();
            for ic in 0..self.in_channels {
                let in_ch = input.channel(ic);
                let gin_ch = gin.channel_mut(ic);
                for ky in 0..self.kernel {
                    let dy = ky as isize - r;
                    let (y0, y1) = Self::span(dy, h);
                    for kx in 0..self.kernel {
                        let dx = kx as isize - r;
                        let (x0, x1) = Self::span(dx, w);
                        if x0 >= x1 {
                            continue;
                        }
                        let weight = self.weights[self.widx(oc, ic, ky, kx)];
                        let mut wgrad = 0.0;
                        for y in y0..y1 {
                            let src = ((y as isize + dy) as usize * w) as isize + dx;
                            let dst = y * w;
                            let g_row = &g_ch[dst + x0..dst + x1];
                            let lo = (src + x0 as isize) as usize;
                            let hi = (src + x1 as isize) as usize;
                            let in_row = &in_ch[lo..hi];
                            let gin_row = &mut gin_ch[lo..hi];
                            for ((&g, &i), gi) in g_row.iter().zip(in_row).zip(gin_row) {
                                wgrad += g * i;
                                *gi += weight * g;
                            }
                        }
                        grad.weights[self.widx(oc, ic, ky, kx)] = wgrad;
                    }
                }
            }
        }
        Ok((grad, gin))
    }
}
