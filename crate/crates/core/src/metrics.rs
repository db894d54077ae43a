use serde::{Deserialize, Serialize};

/// One logged training point. The x-axis is `weights_updated`: the
/// cumulative number of scalar parameters touched by updates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: u64,
    pub weights_updated: u64,
    pub epoch: u64,
    pub phase: String,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
    pub wall_ms: u64,
}

/// Column names of the metrics CSV, in order.
pub const CSV_HEADER: [&str; 8] = [
    "step",
    "weights_updated",
    "epoch",
    "phase",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "wall_ms",
];
