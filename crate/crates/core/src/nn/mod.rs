//! Dense feed-forward network, probability primitives and the SGD optimizer.

mod gradcheck;
mod loss;
mod mlp;
mod optim;

pub use gradcheck::{finite_diff_check, max_gradient_error, FD_STEP};
pub use loss::{
    argmax, cross_entropy, is_probability_vector, kl_divergence, log_softmax, one_hot, softmax,
    softmax_rows, top1_accuracy, KL_EPSILON,
};
pub use mlp::{DenseTensor, ForwardCache, Layer, Mlp};
pub use optim::OptimizerState;
