//! Dense channels × height × width tensor backing the network arithmetic.

use crate::error::{Error, Result};
use crate::field::SampleStack;

/// Row-major, channel-major block of f64 values.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tensor {
    pub(crate) channels: usize,
    pub(crate) height: usize,
    pub(crate) width: usize,
    pub(crate) data: Vec<f64>,
}

impl Tensor {
    pub(crate) fn zeros(channels: usize, height: usize, width: usize) -> Tensor {
        Tensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub(crate) fn plane(&self) -> usize {
        self.height * self.width
    }

    pub(crate) fn channel(&self, c: usize) -> &[f64] {
        let plane = self.plane();
        &self.data[c * plane..(c + 1) * plane]
    }

    pub(crate) fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let plane = self.plane();
        &mut self.data[c * plane..(c + 1) * plane]
    }

    /// Stack a sample's input channels into one tensor.
    pub(crate) fn from_stack(stack: &SampleStack) -> Tensor {
        let (height, width) = (stack.height(), stack.width());
        let mut t = Tensor::zeros(stack.depth(), height, width);
        for (c, field) in stack.channels().iter().enumerate() {
            t.channel_mut(c).copy_from_slice(field.values());
        }
        t
    }

    pub(crate) fn expect_shape(&self, channels: usize, context: &str) -> Result<()> {
        if self.channels != channels {
            return Err(Error::InvalidArgument(format!(
                "{context}: expected {channels} channels, got {}",
                self.channels
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ChannelKind, ScalarField};

    #[test]
    fn stacking_preserves_channel_order() {
        let a = ScalarField::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = ScalarField::new(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let stack = SampleStack::new(
            vec![a.clone(), b],
            vec![ChannelKind::Voronoi, ChannelKind::SparseLocation],
            a,
            vec![1; 4],
        )
        .unwrap();
        let t = Tensor::from_stack(&stack);
        assert_eq!(t.channel(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.channel(1), &[5.0, 6.0, 7.0, 8.0]);
        assert!(t.expect_shape(2, "test").is_ok());
        assert!(t.expect_shape(3, "test").is_err());
    }
}
