use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::scalar::Scalar;

/// SGD with classical momentum and L2 weight decay folded into the gradient:
///
/// ```text
/// buffer <- momentum * buffer + (grad + weight_decay * param)
/// param  <- param - lr * buffer
/// ```
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    buffers: Mlp<T>,
    pub learning_rate: T,
    pub momentum: T,
    pub weight_decay: T,
}

impl<T: Scalar> OptimizerState<T> {
    /// Fresh state with zeroed momentum buffers shaped like `params`.
    pub fn new(params: &Mlp<T>, learning_rate: T, momentum: T, weight_decay: T) -> Result<Self> {
        if !(learning_rate >= T::zero() && learning_rate.is_finite()) {
            return Err(Error::Contract(format!(
                "learning rate must be finite and non-negative, got {learning_rate}"
            )));
        }
        if !(momentum >= T::zero() && momentum < T::one()) {
            return Err(Error::Contract(format!("momentum must lie in [0, 1), got {momentum}")));
        }
        if !(weight_decay >= T::zero() && weight_decay.is_finite()) {
            return Err(Error::Contract(format!(
                "weight decay must be non-negative, got {weight_decay}"
            )));
        }
        Ok(OptimizerState {
            buffers: params.zeros_like(),
            learning_rate,
            momentum,
            weight_decay,
        })
    }

    pub fn buffers(&self) -> &Mlp<T> {
        &self.buffers
    }

    /// One update of `params` in place. Rejects non-finite gradients without
    /// touching either the parameters or the buffers.
    pub fn step(&mut self, params: &mut Mlp<T>, grads: &Mlp<T>) -> Result<()> {
        params.check_same_shape(grads, "sgd_step gradients")?;
        params.check_same_shape(&self.buffers, "sgd_step momentum buffers")?;
        if !grads.all_finite() {
            return Err(Error::Contract("sgd_step received a non-finite gradient".into()));
        }
        let (momentum, decay, lr) = (self.momentum, self.weight_decay, self.learning_rate);
        let mut buffers = std::mem::replace(&mut self.buffers, params.zeros_like());
        {
            // walk the three parameter sets in lockstep
            let p_layers = params.layers_mut();
            for ((p, g), b) in p_layers
                .iter_mut()
                .zip(grads.layers())
                .zip(buffers.layers_mut())
            {
                ndarray::Zip::from(&mut p.weight)
                    .and(&g.weight)
                    .and(&mut b.weight)
                    .for_each(|p, &g, b| {
                        *b = momentum * *b + (g + decay * *p);
                        *p -= lr * *b;
                    });
                ndarray::Zip::from(&mut p.bias)
                    .and(&g.bias)
                    .and(&mut b.bias)
                    .for_each(|p, &g, b| {
                        *b = momentum * *b + (g + decay * *p);
                        *p -= lr * *b;
                    });
            }
        }
        self.buffers = buffers;
        Ok(())
    }
}
