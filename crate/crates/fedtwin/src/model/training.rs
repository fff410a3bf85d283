//! Loss, evaluation, and mini-batch training.

use crate::error::{Error, Result};
use crate::model::{Sample, Seq2seqModel};
use crate::numerics::sgd_step;

/// Mean squared error over paired components: `(1/n) * sum((y - y_hat)^2)`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::shape(format!(
            "mse: {} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::shape("mse: empty vectors".to_string()));
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.len() as f64)
}

impl Seq2seqModel {
    /// Mean per-sample MSE without touching parameters or the shuffle
    /// stream.
    pub fn evaluate(&self, samples: &[Sample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::data(None, "evaluate: empty sample list"));
        }
        let mut total = 0.0;
        for s in samples {
            let pred = self.predict(s)?;
            total += mse_loss(&pred, &s.targets)?;
        }
        Ok(total / samples.len() as f64)
    }

    /// One training epoch: shuffles the samples with the model's seeded
    /// generator, partitions into batches of at most `batch_size`, and per
    /// batch accumulates the mean gradient and applies one SGD step.
    ///
    /// Returns the epoch's mean per-sample loss (the batch-size-weighted
    /// mean of the batch losses, so with `lr = 0` it equals the evaluation
    /// loss exactly).
    pub fn train_epoch(&mut self, samples: &[Sample], batch_size: usize, lr: f64) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::data(None, "train_epoch: empty sample list"));
        }
        if batch_size == 0 {
            return Err(Error::config("batch: must be >= 1".to_string()));
        }
        if !lr.is_finite() || lr < 0.0 {
            return Err(Error::config(format!(
                "lr: learning rate must be finite and non-negative, got {lr}"
            )));
        }

        let mut order: Vec<usize> = (0..samples.len()).collect();
        self.rng_mut().shuffle(&mut order);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch_size) {
            self.params_mut().zero_grads();
            for &i in chunk {
                let sample = &samples[i];
                let pred = self.forward(sample)?;
                loss_sum += mse_loss(&pred, &sample.targets)?;
                self.backward(sample, &pred)?;
            }
            // Mean-gradient reduction over the batch, matching the mean in
            // the loss.
            self.params_mut().scale_grads(1.0 / chunk.len() as f64);
            sgd_step(self.params_mut(), lr)?;
        }
        Ok(loss_sum / samples.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_zero_when_equal() {
        assert_eq!(mse_loss(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
    }

    #[test]
    fn mse_direct_evaluation() {
        // ((0-1)^2 + (0-3)^2) / 2 = 5.
        assert_eq!(mse_loss(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 5.0);
    }

    #[test]
    fn mse_scales_quadratically() {
        let base = mse_loss(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        let scaled = mse_loss(&[0.0, 0.0, 0.0], &[3.0, 6.0, 9.0]).unwrap();
        assert!((scaled - 9.0 * base).abs() < 1e-12);
    }

    #[test]
    fn mse_rejects_length_mismatch() {
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }
}
