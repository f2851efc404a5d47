//! `gradcheck`: verify the analytic gradients against central differences
//! on a deterministic random sample, then prove the comparison has teeth by
//! feeding it deliberately corrupted gradients.

use sfr_core::dataset::Rng;
use sfr_core::field::{ChannelKind, SampleStack, ScalarField};
use sfr_core::model::{grad_check, loss_and_gradients, masked_mse, ConvNet, GradCheckReport, NetShape};

use crate::config::Config;
use crate::error::{config_err, data_err, CliError, Result};

/// What a gradcheck run found: the real comparison and the corrupted one.
pub struct GradCheckSummary {
    pub report: GradCheckReport,
    /// Relative error the checker saw on a 10%-corrupted gradient.
    pub control_error: f64,
    pub control_detected: bool,
}

/// Central-difference derivative of the sample loss with respect to one
/// network parameter, computed through the public forward pass only.
pub fn finite_difference_gradient(
    net: &mut ConvNet,
    stack: &SampleStack,
    index: usize,
    step: f64,
) -> Result<f64> {
    let loss = |net: &ConvNet| -> Result<f64> {
        let pred = net.forward_field(stack).map_err(data_err)?;
        masked_mse(&pred, stack.target(), stack.loss_mask()).map_err(data_err)
    };
    let theta = net.get_param(index);
    net.set_param(index, theta + step);
    let plus = loss(net)?;
    net.set_param(index, theta - step);
    let minus = loss(net)?;
    net.set_param(index, theta);
    Ok((plus - minus) / (2.0 * step))
}

/// A deterministic sample: smoothly varying channels and target, with a
/// repeating hole pattern in the loss mask.
pub fn probe_stack(channels: usize, height: usize, width: usize, seed: u64) -> Result<SampleStack> {
    let mut rng = Rng::new(seed);
    let mut fields = Vec::with_capacity(channels);
    for _ in 0..channels {
        let (a, b, c) = (rng.next_f64(), rng.next_f64(), rng.next_f64());
        fields.push(
            ScalarField::from_fn(height, width, |r, col| {
                (a * 5.0 + b * r as f64 * 0.7 + c * col as f64 * 0.4).sin()
            })
            .map_err(data_err)?,
        );
    }
    let (a, b) = (rng.next_f64(), rng.next_f64());
    let target = ScalarField::from_fn(height, width, |r, col| {
        (a * 3.0 + (r + 2 * col) as f64 * 0.3 * b).cos()
    })
    .map_err(data_err)?;
    let mask: Vec<u8> = (0..height * width).map(|i| u8::from(i % 7 != 3)).collect();
    SampleStack::new(fields, ChannelKind::ALL[..channels].to_vec(), target, mask).map_err(data_err)
}

/// Run the gradient comparison and its negative control. `cfg` may override
/// the probe shape; the defaults keep the run under a second.
pub fn cmd_gradcheck(cfg: Option<&Config>) -> Result<GradCheckSummary> {
    let defaults = Config::from_text("")?;
    let cfg = cfg.unwrap_or(&defaults);
    let channels = cfg.usize_or("gc_channels", 2)?;
    if channels == 0 || channels > ChannelKind::ALL.len() {
        return Err(CliError::Config(format!(
            "key \"gc_channels\": expected 1..={}, got {channels}",
            ChannelKind::ALL.len()
        )));
    }
    let height = cfg.usize_or("gc_height", 10)?;
    let width = cfg.usize_or("gc_width", 12)?;
    let shape = NetShape {
        input_channels: channels,
        layers: cfg.usize_or("layers", 3)?,
        features: cfg.usize_or("features", 6)?,
        kernel: cfg.usize_or("kernel", 3)?,
    };
    let seed = cfg.u64_or("net_seed", 1)?;
    let tolerance = cfg.f64_or("gc_tolerance", 1e-4)?;

    let net = ConvNet::init(shape, seed).map_err(config_err)?;
    let stack = probe_stack(channels, height, width, seed.wrapping_add(1))?;

    let report = grad_check(&net, &stack, tolerance).map_err(data_err)?;
    if !report.pass {
        return Err(CliError::Numeric(format!(
            "gradient check failed: max relative error {} exceeds tolerance {}",
            report.max_relative_error, report.tolerance
        )));
    }

    // Negative control: scale the analytic gradient of the most sensitive
    // parameter by 1.1 and confirm the finite-difference comparison flags
    // it. A checker that cannot see a 10% error is not checking anything.
    let (_, grads) = loss_and_gradients(&net, &stack).map_err(data_err)?;
    let probe_limit = 512.min(net.param_count());
    let stride = net.param_count().div_ceil(probe_limit).max(1);
    let biggest = (0..net.param_count())
        .step_by(stride)
        .max_by(|&a, &b| {
            grads
                .get_flat(a)
                .abs()
                .total_cmp(&grads.get_flat(b).abs())
        })
        .expect("network has parameters");
    let analytic = grads.get_flat(biggest);
    let mut work = net.clone();
    let numeric = finite_difference_gradient(&mut work, &stack, biggest, 1e-5)?;
    let corrupted = analytic * 1.1;
    let control_error = (corrupted - numeric).abs() / corrupted.abs().max(numeric.abs());
    let control_detected = control_error > 5e-2;
    if !control_detected {
        return Err(CliError::Numeric(format!(
            "negative control failed: a 10% gradient corruption only produced relative error {control_error}"
        )));
    }
    Ok(GradCheckSummary {
        report,
        control_error,
        control_detected,
    })
}
