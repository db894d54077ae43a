use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings with a closed-form SLQC constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "snake_case", deny_unknown_fields)]
pub enum KappaSetting {
    /// Generalized-ReLU GLM or multi-output layer: `2 b^3 W / a`.
    GenReluGlm { a: f64, b: f64, w: f64 },
    /// Standard-ReLU GLM or layer: `2 b^2 W`.
    StdReluGlm { b: f64, w: f64 },
    /// Sigmoid GLM: `e^W`.
    SigmoidGlm { w: f64 },
    /// Inner layer of a one-hidden-layer net:
    /// `(a / (4 b^5 W2^2 W1) - W1 / eps)^-1`.
    InnerLayer {
        a: f64,
        b: f64,
        w1: f64,
        w2: f64,
        eps: f64,
    },
    /// Sigmoid with binary cross-entropy: `eps / (1 - e^-eps)^2`.
    CeSigmoid { eps: f64 },
    /// Softmax with cross-entropy over `d'` classes: `eps d' / (1 - e^-eps)^2`.
    CeSoftmax { eps: f64, d_prime: usize },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Smallest `eps` for which the inner-layer constant is positive:
/// `4 b^5 W2^2 W1^2 / a`.
pub fn inner_layer_min_eps(a: f64, b: f64, w1: f64, w2: f64) -> f64 {
    4.0 * b.powi(5) * w2 * w2 * w1 * w1 / a
}

/// Largest squared error any inner-layer instance can reach when inputs lie
/// in the unit ball and `||W1||, ||W1*|| <= W1`, `||w2||, ||w2*|| <= W2`:
/// each prediction is bounded by `b^2 W2 W1` in magnitude, so the residual
/// is at most `2 b^2 W2 W1`.
pub fn inner_layer_error_ceiling(b: f64, w1: f64, w2: f64) -> f64 {
    let r = 2.0 * b * b * w2 * w1;
    r * r
}

pub fn kappa_for(setting: KappaSetting) -> Result<f64> {
    let k = match setting {
        KappaSetting::GenReluGlm { a, b, w } => {
            positive("a", a)?;
            positive("b", b)?;
            positive("W", w)?;
            if a > b {
                return Err(Error::InvalidConfig(format!(
                    "need a <= b, got a={a}, b={b}"
                )));
            }
            2.0 * b.powi(3) * w / a
        }
        KappaSetting::StdReluGlm { b, w } => {
            positive("b", b)?;
            positive("W", w)?;
            2.0 * b * b * w
        }
        KappaSetting::SigmoidGlm { w } => {
            positive("W", w)?;
            w.exp()
        }
        KappaSetting::InnerLayer { a, b, w1, w2, eps } => {
            for (n, v) in [("a", a), ("b", b), ("W1", w1), ("W2", w2), ("eps", eps)] {
                positive(n, v)?;
            }
            let inv = a / (4.0 * b.powi(5) * w2 * w2 * w1) - w1 / eps;
            if inv <= 0.0 {
                return Err(Error::KappaUndefined {
                    min_eps: inner_layer_min_eps(a, b, w1, w2),
                });
            }
            1.0 / inv
        }
        KappaSetting::CeSigmoid { eps } => {
            positive("eps", eps)?;
            eps / (1.0 - (-eps).exp()).powi(2)
        }
        KappaSetting::CeSoftmax { eps, d_prime } => {
            positive("eps", eps)?;
            if d_prime < 2 {
                return Err(Error::InvalidConfig(
                    "softmax needs at least 2 classes".into(),
                ));
            }
            eps * d_prime as f64 / (1.0 - (-eps).exp()).powi(2)
        }
    };
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidConfig(format!("kappa evaluated to {k}")));
    }
    Ok(k)
}

/// Sample size making the noisy generalized-ReLU GLM SLQC with probability
/// `1 - delta`: `ceil(288 b^4 W^4 ln(1/delta) / (a^2 eps^2))`.
pub fn noisy_sample_complexity(
    a: f64,
    b: f64,
    weight_bound: f64,
    eps: f64,
    delta: f64,
) -> Result<u64> {
    for (n, v) in [
        ("a", a),
        ("b", b),
        ("W", weight_bound),
        ("eps", eps),
        ("delta", delta),
    ] {
        positive(n, v)?;
    }
    if delta >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "delta must be < 1, got {delta}"
        )));
    }
    let m = 288.0 * b.powi(4) * weight_bound.powi(4) * (1.0 / delta).ln() / (a * a * eps * eps);
    // Guard against `ln` rounding pushing an exact integer up by one ulp.
    let r = m.round();
    let m = if (m - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        m.ceil()
    };
    Ok(m as u64)
}
