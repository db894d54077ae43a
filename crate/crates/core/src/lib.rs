//! Dense feed-forward networks trained by alternating minimization with
//! normalized gradient steps (DANTE) or by end-to-end backprop, plus
//! numerical certification of layer-wise strict local quasi-convexity.

pub mod dante;
pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod slqc;

pub use dante::{
    train, train_autoencoder_pairs, train_backprop, train_layer_phase, train_round_robin,
    train_single_hidden, PhasePlan, Scheduler, TrainConfig, TrainData, TrainOutcome,
};
pub use data::{Dataset, DatasetKind, NormalizationMode};
pub use error::{Error, Result};
pub use linalg::{frobenius_inner, frobenius_norm, DenseMatrix};
pub use metrics::{MetricsRecord, CSV_HEADER};
pub use nn::{ActivationKind, Batch, LayerSpec, LossKind, NetworkSpec, NetworkState};
pub use optim::{sngd_convergence_params, OptimizerKind, SngdParams};
pub use rng::Rng;
