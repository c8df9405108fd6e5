use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major `rows x cols` matrix. One row per sample.
pub type DenseTensor<T> = Array2<T>;

/// One affine layer: `y = x W^T + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    /// `out x in`
    pub weight: Array2<T>,
    /// `out`
    pub bias: Array1<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// Multi-layer perceptron with rectifier hidden activations and raw-logit output.
///
/// The same type doubles as the container for gradients and momentum buffers,
/// which always share the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Layer<T>>,
}

/// Layer inputs recorded during a forward pass, needed by [`Mlp::backprop`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// `inputs[i]` is the input of layer `i` (post-activation of layer `i - 1`).
    inputs: Vec<Array2<T>>,
    logits: Array2<T>,
}

impl<T> ForwardCache<T> {
    pub fn logits(&self) -> &Array2<T> {
        &self.logits
    }

    pub fn into_logits(self) -> Array2<T> {
        self.logits
    }
}

impl<T: Scalar> Mlp<T> {
    /// Builds a network from explicit layers, checking that dimensions chain.
    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Contract("a network needs at least one layer".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.outputs() {
                return Err(Error::shape(
                    format!("layer {i} bias"),
                    layer.outputs(),
                    layer.bias.len(),
                ));
            }
            if let Some(next) = layers.get(i + 1) {
                if next.inputs() != layer.outputs() {
                    return Err(Error::shape(
                        format!("layer {} input", i + 1),
                        layer.outputs(),
                        next.inputs(),
                    ));
                }
            }
        }
        Ok(Mlp { layers })
    }

    /// He-normal initialised network with zero biases.
    ///
    /// `sizes` lists every width from input to output, e.g. `[784, 128, 10]`.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Contract(format!(
                "layer sizes must have at least two positive entries, got {sizes:?}"
            )));
        }
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (inputs, outputs) = (pair[0], pair[1]);
                let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt())
                    .expect("positive standard deviation");
                Layer {
                    weight: Array2::from_shape_simple_fn((outputs, inputs), || {
                        T::of(normal.sample(rng))
                    }),
                    bias: Array1::zeros(outputs),
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    /// All-zero network with the same shapes as `self`.
    pub fn zeros_like(&self) -> Self {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::outputs))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weight.dim() == b.weight.dim() && a.bias.len() == b.bias.len())
    }

    pub(crate) fn check_same_shape(&self, other: &Self, context: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(
                context,
                format!("{:?}", self.sizes()),
                format!("{:?}", other.sizes()),
            ))
        }
    }

    /// Parameters in a fixed order: per layer, weight (row-major) then bias.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend(layer.weight.iter().copied());
            out.extend(layer.bias.iter().copied());
        }
        out
    }

    /// Network with `self`'s shapes and the given flat parameters.
    pub fn with_flat(&self, flat: &[T]) -> Result<Self> {
        if flat.len() != self.num_params() {
            return Err(Error::shape("flat parameters", self.num_params(), flat.len()));
        }
        let mut out = self.clone();
        let mut values = flat.iter().copied();
        for layer in &mut out.layers {
            for (dst, src) in layer.weight.iter_mut().zip(&mut values) {
                *dst = src;
            }
            for (dst, src) in layer.bias.iter_mut().zip(&mut values) {
                *dst = src;
            }
        }
        Ok(out)
    }

    /// Applies `f(self_param, other_param)` to every parameter pair in place.
    pub fn zip_apply(&mut self, other: &Self, mut f: impl FnMut(&mut T, T)) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            Zip::from(&mut a.weight).and(&b.weight).for_each(|x, &y| f(x, y));
            Zip::from(&mut a.bias).and(&b.bias).for_each(|x, &y| f(x, y));
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, scale: T, other: &Self) {
        self.zip_apply(other, |x, y| *x += scale * y);
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Squared Euclidean distance between two parameter sets.
    pub fn squared_distance(&self, other: &Self) -> T {
        debug_assert!(self.same_shape(other));
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                let w: T = Zip::from(&a.weight)
                    .and(&b.weight)
                    .fold(T::zero(), |acc, &x, &y| acc + (x - y) * (x - y));
                let bias: T = Zip::from(&a.bias)
                    .and(&b.bias)
                    .fold(T::zero(), |acc, &x, &y| acc + (x - y) * (x - y));
                w + bias
            })
            .sum()
    }

    /// Logits for a `B x d` batch.
    pub fn forward(&self, batch: ArrayView2<'_, T>) -> Result<Array2<T>> {
        self.check_input(batch)?;
        let last = self.layers.len() - 1;
        let mut act = batch.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            act = affine(layer, act.view());
            if i < last {
                act.mapv_inplace(relu);
            }
        }
        Ok(act)
    }

    /// Forward pass that keeps the layer inputs for backpropagation.
    pub fn forward_cached(&self, batch: ArrayView2<'_, T>) -> Result<ForwardCache<T>> {
        self.check_input(batch)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut act = batch.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = affine(layer, act.view());
            if i < last {
                next.mapv_inplace(relu);
            }
            inputs.push(act);
            act = next;
        }
        Ok(ForwardCache { inputs, logits: act })
    }

    /// Gradients of the loss with respect to every parameter.
    ///
    /// `d_logits` holds the per-sample gradients of the total loss with respect
    /// to the logits, already divided by the batch size: the loss is a batch
    /// mean and no further averaging happens here.
    pub fn backprop(&self, cache: &ForwardCache<T>, d_logits: ArrayView2<'_, T>) -> Result<Self> {
        if d_logits.dim() != cache.logits.dim() {
            return Err(Error::shape(
                "backprop logit gradient",
                format!("{:?}", cache.logits.dim()),
                format!("{:?}", d_logits.dim()),
            ));
        }
        if cache.inputs.len() != self.layers.len() {
            return Err(Error::shape(
                "backprop forward cache",
                self.layers.len(),
                cache.inputs.len(),
            ));
        }
        let mut grads: Vec<Layer<T>> = Vec::with_capacity(self.layers.len());
        let mut delta = d_logits.to_owned();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            let weight = delta.t().dot(input);
            let bias = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut upstream = delta.dot(&layer.weight);
                // rectifier derivative: the layer input is relu(z), positive iff z > 0
                Zip::from(&mut upstream).and(input).for_each(|g, &a| {
                    if a <= T::zero() {
                        *g = T::zero();
                    }
                });
                delta = upstream;
            }
            grads.push(Layer { weight, bias });
        }
        grads.reverse();
        Ok(Mlp { layers: grads })
    }

    fn check_input(&self, batch: ArrayView2<'_, T>) -> Result<()> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::shape(
                "layer 0 input (batch columns)",
                self.input_dim(),
                batch.ncols(),
            ));
        }
        Ok(())
    }
}

fn affine<T: Scalar>(layer: &Layer<T>, input: ArrayView2<'_, T>) -> Array2<T> {
    let mut out = input.dot(&layer.weight.t());
    out += &layer.bias;
    out
}

#[inline]
fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::{array, Array1};

    fn identity_layer(bias: [f64; 2]) -> Mlp<f64> {
        Mlp::from_layers(vec![Layer {
            weight: array![[1.0, 0.0], [0.0, 1.0]],
            bias: Array1::from(bias.to_vec()),
        }])
        .unwrap()
    }

    #[test]
    fn identity_forward() {
        let out = identity_layer([0.0, 0.0]).forward(array![[1.0, 2.0]].view()).unwrap();
        assert_eq!(out, array![[1.0, 2.0]]);
    }

    #[test]
    fn bias_only_forward() {
        let out = identity_layer([1.0, 1.0]).forward(array![[0.0, 0.0]].view()).unwrap();
        assert_eq!(out, array![[1.0, 1.0]]);
    }

    #[test]
    fn two_layer_forward_matches_straight_line_products() {
        let model = Mlp::<f64>::init(&[4, 3, 2], &mut rng::stream(0, &[])).unwrap();
        let x = [1.0, 0.0, 0.0, 0.0];
        // independent re-implementation with plain loops
        let l0 = &model.layers()[0];
        let l1 = &model.layers()[1];
        let mut hidden = [0.0; 3];
        for (o, h) in hidden.iter_mut().enumerate() {
            let mut z = l0.bias[o];
            for (i, xi) in x.iter().enumerate() {
                z += l0.weight[[o, i]] * xi;
            }
            *h = z.max(0.0);
        }
        let mut expected = vec![0.0; 2];
        for (o, e) in expected.iter_mut().enumerate() {
            let mut z = l1.bias[o];
            for (i, hi) in hidden.iter().enumerate() {
                z += l1.weight[[o, i]] * hi;
            }
            *e = z;
        }
        let got = model
            .forward(Array2::from_shape_vec((1, 4), x.to_vec()).unwrap().view())
            .unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-14, "{g} vs {e}");
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let model = Mlp::<f64>::init(&[3, 2], &mut rng::stream(0, &[])).unwrap();
        let err = model.forward(Array2::zeros((1, 4)).view()).unwrap_err();
        assert!(err.to_string().contains("layer 0"), "{err}");
    }

    #[test]
    fn layers_must_chain() {
        let err = Mlp::<f64>::from_layers(vec![Layer::zeros(3, 4), Layer::zeros(5, 2)]).unwrap_err();
        assert!(err.to_string().contains("layer 1"), "{err}");
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let model = Mlp::<f64>::init(&[3, 5, 2], &mut rng::stream(1, &[])).unwrap();
        let x = array![[0.3, -0.2, 1.0], [1.5, 0.1, -0.7]];
        let cache = model.forward_cached(x.view()).unwrap();
        let grads = model.backprop(&cache, Array2::zeros((2, 2)).view()).unwrap();
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
        assert!(grads.same_shape(&model));
    }

    #[test]
    fn single_layer_weight_gradient_is_outer_product() {
        let model = Mlp::<f64>::init(&[3, 2], &mut rng::stream(2, &[])).unwrap();
        let x = array![[0.5, -1.0, 2.0]];
        let g = array![[0.25, -0.75]];
        let cache = model.forward_cached(x.view()).unwrap();
        let grads = model.backprop(&cache, g.view()).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(grads.layers()[0].weight[[o, i]], g[[0, o]] * x[[0, i]]);
            }
            assert_eq!(grads.layers()[0].bias[o], g[[0, o]]);
        }
    }

    #[test]
    fn flatten_round_trips() {
        let model = Mlp::<f64>::init(&[3, 4, 2], &mut rng::stream(3, &[])).unwrap();
        let flat = model.flatten();
        assert_eq!(flat.len(), model.num_params());
        assert_eq!(model.zeros_like().with_flat(&flat).unwrap(), model);
    }

    #[test]
    fn forward_is_bit_deterministic() {
        let model = Mlp::<f64>::init(&[6, 8, 8, 3], &mut rng::stream(4, &[])).unwrap();
        let x = Array2::from_shape_fn((5, 6), |(r, c)| (r as f64 - c as f64) * 0.37);
        let a = model.forward(x.view()).unwrap();
        let b = model.forward(x.view()).unwrap();
        assert_eq!(a, b);
    }
}
