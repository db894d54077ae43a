//! Dense feed-forward networks: activations, losses, forward pass and
//! per-layer gradients.

mod activation;
mod loss;
mod network;

pub use activation::{act_eval, act_subgrad, sigmoid, ActivationKind};
pub(crate) use loss::argmax;
pub use loss::{accuracy, clamp_warning_count, loss_eval, LossKind, PROB_FLOOR};
pub(crate) use network::gradients_from;
pub use network::{
    forward, forward_from, full_gradient, layer_gradient, predict, Batch, LayerSpec, NetworkSpec,
    NetworkState,
};
