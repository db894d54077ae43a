use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    MeanSquaredError,
    BinaryCrossEntropy,
    CategoricalCrossEntropy,
}

/// Arguments of `ln` below this are raised to it. For binary
/// cross-entropy this bounds both `p` and `1 - p`.
pub const PROB_FLOOR: f64 = 1e-12;

static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of probabilities clamped by cross-entropy evaluation so far in
/// this process.
pub fn clamp_warning_count() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

fn clamped_ln(p: f64, clamps: &mut u64) -> f64 {
    if p < PROB_FLOOR {
        *clamps += 1;
        PROB_FLOOR.ln()
    } else {
        p.ln()
    }
}

/// Mean over samples, summed over output coordinates.
pub fn loss_eval(loss: LossKind, pred: &DenseMatrix, target: &DenseMatrix) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch {
            op: "loss_eval",
            left: pred.shape(),
            right: target.shape(),
        });
    }
    let m = pred.rows() as f64;
    let mut clamps = 0u64;
    let total: f64 = match loss {
        LossKind::MeanSquaredError => pred
            .data()
            .iter()
            .zip(target.data())
            .map(|(p, y)| (y - p) * (y - p))
            .sum(),
        LossKind::CategoricalCrossEntropy => pred
            .data()
            .iter()
            .zip(target.data())
            .filter(|(_, &y)| y != 0.0)
            .map(|(&p, &y)| -y * clamped_ln(p, &mut clamps))
            .sum(),
        LossKind::BinaryCrossEntropy => pred
            .data()
            .iter()
            .zip(target.data())
            .map(|(&p, &y)| {
                let mut v = 0.0;
                if y != 0.0 {
                    v -= y * clamped_ln(p, &mut clamps);
                }
                if y != 1.0 {
                    v -= (1.0 - y) * clamped_ln(1.0 - p, &mut clamps);
                }
                v
            })
            .sum(),
    };
    if clamps > 0 {
        let before = CLAMP_EVENTS.fetch_add(clamps, Ordering::Relaxed);
        if before == 0 {
            log::warn!("cross-entropy clamped {clamps} probabilities up to 1e-12");
        }
    }
    // Rounding can leave a tiny negative sum for CE at exact one-hot fits.
    Ok((total / m).max(0.0))
}

/// Fraction of rows whose argmax in `pred` matches the argmax in `target`.
pub fn accuracy(pred: &DenseMatrix, target: &DenseMatrix) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch {
            op: "accuracy",
            left: pred.shape(),
            right: target.shape(),
        });
    }
    let hits = (0..pred.rows())
        .filter(|&r| argmax(pred.row(r)) == argmax(target.row(r)))
        .count();
    Ok(hits as f64 / pred.rows() as f64)
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
