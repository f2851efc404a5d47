//! Numerical verification of the analytic gradients by central differences.

use crate::error::{Error, Result};
use crate::field::SampleStack;
use crate::model::loss::{loss_and_gradients, masked_mse_slices};
use crate::model::net::ConvNet;
use crate::model::tensor::Tensor;

/// Finite-difference step.
const FD_STEP: f64 = 1e-5;
/// Below this magnitude the relative error is meaningless; compare
/// absolutely instead.
const SMALL_GRAD: f64 = 1e-7;
/// At most this many parameters are probed (evenly strided) so the check
/// stays tractable on large networks.
const MAX_CHECKED: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub parameters_checked: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Error between an analytic and a numeric derivative: relative to the
/// larger magnitude, absolute when both are almost zero.
pub(crate) fn gradient_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    let denom = analytic.abs().max(numeric.abs());
    if denom < SMALL_GRAD {
        diff
    } else {
        diff / denom
    }
}

fn sample_loss(net: &ConvNet, stack: &SampleStack) -> Result<f64> {
    let pred = net.forward_tensor(Tensor::from_stack(stack))?;
    masked_mse_slices(pred.channel(0), stack.target().values(), stack.loss_mask())
}

/// Central-difference derivative of the sample loss with respect to one
/// parameter; the parameter is restored afterwards.
pub(crate) fn numeric_gradient(
    net: &mut ConvNet,
    stack: &SampleStack,
    index: usize,
) -> Result<f64> {
    let theta = net.get_param(index);
    net.set_param(index, theta + FD_STEP);
    let plus = sample_loss(net, stack)?;
    net.set_param(index, theta - FD_STEP);
    let minus = sample_loss(net, stack)?;
    net.set_param(index, theta);
    Ok((plus - minus) / (2.0 * FD_STEP))
}

/// Compare backpropagated gradients against central differences over (up
/// to 1024 evenly strided) parameters; passes iff the worst error is under
/// `tolerance`.
pub fn grad_check(net: &ConvNet, stack: &SampleStack, tolerance: f64) -> Result<GradCheckReport> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let (_, grads) = loss_and_gradients(net, stack)?;
    let total = net.param_count();
    let stride = total.div_ceil(MAX_CHECKED).max(1);
    let mut work = net.clone();
    let mut max_error = 0.0f64;
    let mut checked = 0;
    for index in (0..total).step_by(stride) {
        let numeric = numeric_gradient(&mut work, stack, index)?;
        let analytic = grads.get_flat(index);
        max_error = max_error.max(gradient_error(analytic, numeric));
        checked += 1;
    }
    Ok(GradCheckReport {
        max_relative_error: max_error,
        parameters_checked: checked,
        tolerance,
        pass: max_error < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ChannelKind, ScalarField};
    use crate::model::conv::ConvLayer;
    use crate::model::net::NetShape;

    fn stack(channels: usize, h: usize, w: usize, mask: Option<Vec<u8>>) -> SampleStack {
        let fields: Vec<ScalarField> = (0..channels)
            .map(|c| {
                ScalarField::from_fn(h, w, |r, col| {
                    ((r * w + col) as f64 * 0.43 + c as f64 * 1.7).sin()
                })
                .unwrap()
            })
            .collect();
        let target = ScalarField::from_fn(h, w, |r, col| ((r + col) as f64 * 0.21).cos()).unwrap();
        SampleStack::new(
            fields,
            ChannelKind::ALL[..channels].to_vec(),
            target,
            mask.unwrap_or_else(|| vec![1; h * w]),
        )
        .unwrap()
    }

    #[test]
    fn identity_single_layer_net_passes_tight() {
        let layer = ConvLayer::with_params(1, 1, 1, vec![1.0], vec![0.0]).unwrap();
        let net = ConvNet::from_layers(vec![layer]).unwrap();
        let report = grad_check(&net, &stack(1, 6, 6, None), 1e-6).unwrap();
        assert!(report.pass, "max error {}", report.max_relative_error);
        assert_eq!(report.parameters_checked, 2);
    }

    #[test]
    fn random_three_layer_net_passes() {
        let net = ConvNet::init(
            NetShape {
                input_channels: 2,
                layers: 3,
                features: 4,
                kernel: 3,
            },
            1,
        )
        .unwrap();
        let report = grad_check(&net, &stack(2, 8, 8, None), 1e-4).unwrap();
        assert!(report.pass, "max error {}", report.max_relative_error);
        assert_eq!(report.parameters_checked, net.param_count());
    }

    #[test]
    fn masked_loss_gradients_also_pass() {
        let net = ConvNet::init(
            NetShape {
                input_channels: 1,
                layers: 2,
                features: 3,
                kernel: 3,
            },
            4,
        )
        .unwrap();
        let mut mask = vec![1u8; 36];
        for i in [0, 7, 13, 22, 35] {
            mask[i] = 0;
        }
        let report = grad_check(&net, &stack(1, 6, 6, Some(mask)), 1e-4).unwrap();
        assert!(report.pass, "max error {}", report.max_relative_error);
    }

    #[test]
    fn corrupted_gradients_fail_the_comparison() {
        let net = ConvNet::init(
            NetShape {
                input_channels: 1,
                layers: 2,
                features: 2,
                kernel: 3,
            },
            2,
        )
        .unwrap();
        let s = stack(1, 5, 5, None);
        let (_, grads) = loss_and_gradients(&net, &s).unwrap();
        let mut work = net.clone();
        // Pick a parameter with a healthy gradient and shift the analytic
        // value by 10%: the error measure must blow past any sane tolerance.
        let index = (0..net.param_count())
            .max_by(|&a, &b| {
                grads
                    .get_flat(a)
                    .abs()
                    .partial_cmp(&grads.get_flat(b).abs())
                    .unwrap()
            })
            .unwrap();
        let numeric = numeric_gradient(&mut work, &s, index).unwrap();
        let honest = gradient_error(grads.get_flat(index), numeric);
        let corrupted = gradient_error(grads.get_flat(index) * 1.1, numeric);
        assert!(honest < 1e-4);
        assert!(corrupted > 5e-2);
    }

    #[test]
    fn bad_tolerance_is_rejected() {
        let layer = ConvLayer::with_params(1, 1, 1, vec![1.0], vec![0.0]).unwrap();
        let net = ConvNet::from_layers(vec![layer]).unwrap();
        let s = stack(1, 3, 3, None);
        assert!(grad_check(&net, &s, 0.0).is_err());
        assert!(grad_check(&net, &s, f64::NAN).is_err());
    }

    #[test]
    fn near_zero_gradients_compare_absolutely() {
        assert_eq!(gradient_error(0.0, 0.0), 0.0);
        assert!(gradient_error(1e-9, -1e-9) < 1e-8);
        assert!(gradient_error(1.0, 1.0 + 1e-6) < 2e-6);
        assert!(gradient_error(1.0, 2.0) >= 0.5);
    }
}
