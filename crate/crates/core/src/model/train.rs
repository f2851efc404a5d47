//! The training loop: deterministic mini-batch order, Adam updates, and
//! best-validation-epoch model selection.
//!
//! Loss masking is a property of the samples, not of the loop — every
//! [`SampleStack`](crate::field::SampleStack) carries its loss mask, so a
//! provider assembled with masking off simply serves all-ones masks.

use crate::dataset::rng::{prng_next, Rng};
use crate::dataset::sample::SampleProvider;
use crate::error::{Error, Result};
use crate::model::adam::{AdamConfig, AdamState};
use crate::model::loss::{loss_and_gradients, masked_mse_slices, Gradients};
use crate::model::net::ConvNet;
use crate::model::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Seeds the per-epoch batch shuffle (not the weight init).
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 300,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        self.adam.validate()
    }
}

/// Mean train/val loss of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// The selected model plus the full loss history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss (the
    /// initial parameters when no epoch ran).
    pub net: ConvNet,
    pub history: Vec<EpochStats>,
    pub best_epoch: Option<usize>,
}

/// Mean masked loss of a provider's samples under the current parameters.
pub fn validation_loss(net: &ConvNet, samples: &dyn SampleProvider) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("validation set is empty".into()));
    }
    let mut total = 0.0;
    for i in 0..samples.len() {
        let stack = samples.get(i)?;
        let pred = net.forward_tensor(Tensor::from_stack(&stack))?;
        total += masked_mse_slices(pred.channel(0), stack.target().values(), stack.loss_mask())?;
    }
    Ok(total / samples.len() as f64)
}

/// Run up to `max_epochs` epochs of mini-batch Adam and return the
/// parameters from the epoch with the lowest validation loss. Batch order
/// is a deterministic function of (seed, epoch); gradients within a batch
/// are averaged in index order, so a rerun reproduces the result exactly.
/// A non-finite train or validation loss aborts with a diagnostic.
pub fn train(
    net: ConvNet,
    train_set: &dyn SampleProvider,
    val_set: &dyn SampleProvider,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if val_set.is_empty() {
        return Err(Error::InvalidArgument("validation set is empty".into()));
    }
    let mut net = net;
    let mut state = AdamState::new(&net);
    let mut history = Vec::with_capacity(cfg.max_epochs);
    let mut best: Option<(usize, f64, ConvNet)> = None;
    let n = train_set.len();
    for epoch in 0..cfg.max_epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut epoch_stream = epoch as u64;
        Rng::new(cfg.seed ^ prng_next(&mut epoch_stream)).shuffle(&mut order);

        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros_like(&net);
            for &i in batch {
                let stack = train_set.get(i)?;
                let (loss, g) = loss_and_gradients(&net, &stack)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch, loss });
                }
                loss_sum += loss;
                grads.add(&g);
            }
            grads.scale(1.0 / batch.len() as f64);
            state.step(&mut net, &grads, &cfg.adam)?;
        }
        let train_loss = loss_sum / n as f64;
        let val_loss = validation_loss(&net, val_set)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: val_loss });
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });
        if best.as_ref().is_none_or(|(_, b, _)| val_loss < *b) {
            best = Some((epoch, val_loss, net.clone()));
        }
    }
    let (best_epoch, chosen) = match best {
        Some((e, _, snapshot)) => (Some(e), snapshot),
        None => (None, net),
    };
    Ok(TrainOutcome {
        net: chosen,
        history,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ChannelKind, SampleStack, ScalarField};
    use crate::model::net::NetShape;

    fn identity_task(h: usize, w: usize, phase: f64) -> SampleStack {
        let f = ScalarField::from_fn(h, w, |r, c| ((r * w + c) as f64 * 0.4 + phase).sin()).unwrap();
        SampleStack::new(
            vec![f.clone()],
            vec![ChannelKind::Voronoi],
            f,
            vec![1; h * w],
        )
        .unwrap()
    }

    fn small_shape() -> NetShape {
        NetShape {
            input_channels: 1,
            layers: 2,
            features: 3,
            kernel: 3,
        }
    }

    #[test]
    fn zero_epochs_returns_the_initial_net() {
        let net = ConvNet::init(small_shape(), 1).unwrap();
        let data = vec![identity_task(4, 4, 0.0)];
        let out = train(
            net.clone(),
            &data,
            &data,
            &TrainConfig {
                max_epochs: 0,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(out.net, net);
        assert!(out.history.is_empty());
        assert_eq!(out.best_epoch, None);
    }

    #[test]
    fn tiny_fit_drives_the_loss_down() {
        let net = ConvNet::init(small_shape(), 1).unwrap();
        let data = vec![identity_task(6, 6, 0.0)];
        let cfg = TrainConfig {
            max_epochs: 80,
            batch_size: 1,
            adam: AdamConfig {
                learning_rate: 1e-2,
                ..AdamConfig::default()
            },
            seed: 1,
        };
        let out = train(net, &data, &data, &cfg).unwrap();
        assert_eq!(out.history.len(), 80);
        let first = out.history[0].train_loss;
        let last = out.history[79].train_loss;
        assert!(last < 0.1 * first, "loss went {first} -> {last}");
        // Decreasing on average: the late-epoch mean sits well under the
        // early-epoch mean even if single steps wobble.
        let head: f64 = out.history[..10].iter().map(|e| e.train_loss).sum::<f64>() / 10.0;
        let tail: f64 = out.history[70..].iter().map(|e| e.train_loss).sum::<f64>() / 10.0;
        assert!(tail < head);
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<SampleStack> = (0..5).map(|i| identity_task(5, 5, i as f64)).collect();
        let cfg = TrainConfig {
            max_epochs: 6,
            batch_size: 2,
            adam: AdamConfig {
                learning_rate: 3e-3,
                ..AdamConfig::default()
            },
            seed: 9,
        };
        let run = || {
            train(ConvNet::init(small_shape(), 1).unwrap(), &data, &data, &cfg).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.net, b.net);
        assert_eq!(a.history, b.history);
        assert_eq!(a.best_epoch, b.best_epoch);
    }

    #[test]
    fn returned_net_is_the_validation_minimum() {
        let train_data: Vec<SampleStack> = (0..4).map(|i| identity_task(5, 5, i as f64)).collect();
        let val_data = vec![identity_task(5, 5, 7.5)];
        // A deliberately twitchy learning rate so validation loss bounces.
        let cfg = TrainConfig {
            max_epochs: 25,
            batch_size: 4,
            adam: AdamConfig {
                learning_rate: 5e-2,
                ..AdamConfig::default()
            },
            seed: 3,
        };
        let out = train(
            ConvNet::init(small_shape(), 2).unwrap(),
            &train_data,
            &val_data,
            &cfg,
        )
        .unwrap();
        let best_epoch = out.best_epoch.unwrap();
        let min_val = out
            .history
            .iter()
            .map(|e| e.val_loss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.history[best_epoch].val_loss, min_val);
        // First epoch achieving the minimum wins (strict improvement only).
        let first_argmin = out.history.iter().position(|e| e.val_loss == min_val).unwrap();
        assert_eq!(best_epoch, first_argmin);
        // And the returned parameters really do produce that loss.
        let recomputed = validation_loss(&out.net, &val_data).unwrap();
        assert_eq!(recomputed, min_val);
    }

    #[test]
    fn empty_sets_are_rejected() {
        let net = ConvNet::init(small_shape(), 1).unwrap();
        let data = vec![identity_task(4, 4, 0.0)];
        let none: Vec<SampleStack> = vec![];
        assert!(matches!(
            train(net.clone(), &none, &data, &TrainConfig::default()),
            Err(Error::EmptyTrainingSet)
        ));
        assert!(train(net, &data, &none, &TrainConfig::default()).is_err());
    }

    #[test]
    fn exploding_parameters_abort_with_a_diagnostic() {
        let net = ConvNet::init(small_shape(), 1).unwrap();
        let data = vec![identity_task(4, 4, 0.0)];
        // One step of this learning rate pushes the head parameters past
        // ±1e160, so the next squared residual overflows to infinity.
        let cfg = TrainConfig {
            max_epochs: 10,
            batch_size: 1,
            adam: AdamConfig {
                learning_rate: 1e160,
                ..AdamConfig::default()
            },
            seed: 1,
        };
        match train(net, &data, &data, &cfg) {
            Err(Error::Divergence { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn batch_size_larger_than_the_dataset_still_works() {
        let data: Vec<SampleStack> = (0..3).map(|i| identity_task(4, 4, i as f64)).collect();
        let out = train(
            ConvNet::init(small_shape(), 1).unwrap(),
            &data,
            &data,
            &TrainConfig {
                max_epochs: 2,
                batch_size: 64,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(out.history.len(), 2);
    }
}
