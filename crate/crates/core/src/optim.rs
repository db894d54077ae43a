//! Parameter update rules: SNGD, SGD and the adaptive variants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, DenseMatrix};

/// Gradients with Frobenius norm at or below this are treated as zero.
pub const ZERO_GRAD_NORM: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerKind {
    Sngd {
        eta: f64,
    },
    Sgd {
        eta: f64,
    },
    SgdMomentum {
        eta: f64,
        mu: f64,
    },
    SngdMomentum {
        eta: f64,
        mu: f64,
    },
    Adam {
        eta: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps_hat")]
        eps_hat: f64,
    },
    Adagrad {
        eta: f64,
        #[serde(default = "default_eps_hat")]
        eps_hat: f64,
    },
    RmsProp {
        eta: f64,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_eps_hat")]
        eps_hat: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_rho() -> f64 {
    0.9
}
fn default_eps_hat() -> f64 {
    1e-8
}

impl OptimizerKind {
    pub fn adam(eta: f64) -> Self {
        OptimizerKind::Adam {
            eta,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps_hat: default_eps_hat(),
        }
    }

    pub fn adagrad(eta: f64) -> Self {
        OptimizerKind::Adagrad {
            eta,
            eps_hat: default_eps_hat(),
        }
    }

    pub fn rmsprop(eta: f64) -> Self {
        OptimizerKind::RmsProp {
            eta,
            rho: default_rho(),
            eps_hat: default_eps_hat(),
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            OptimizerKind::Sngd { eta }
            | OptimizerKind::Sgd { eta }
            | OptimizerKind::SgdMomentum { eta, .. }
            | OptimizerKind::SngdMomentum { eta, .. }
            | OptimizerKind::Adam { eta, .. }
            | OptimizerKind::Adagrad { eta, .. }
            | OptimizerKind::RmsProp { eta, .. } => eta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sngd { .. } => "sngd",
            OptimizerKind::Sgd { .. } => "sgd",
            OptimizerKind::SgdMomentum { .. } => "sgd_momentum",
            OptimizerKind::SngdMomentum { .. } => "sngd_momentum",
            OptimizerKind::Adam { .. } => "adam",
            OptimizerKind::Adagrad { .. } => "adagrad",
            OptimizerKind::RmsProp { .. } => "rmsprop",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidOptimizer(format!(
                    "{name} must lie in (0, 1), got {v}"
                )))
            }
        };
        let eta = self.eta();
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidOptimizer(format!(
                "eta must be positive, got {eta}"
            )));
        }
        match *self {
            OptimizerKind::SgdMomentum { mu, .. } | OptimizerKind::SngdMomentum { mu, .. } => {
                if !(0.0..1.0).contains(&mu) {
                    return Err(Error::InvalidOptimizer(format!(
                        "mu must lie in [0, 1), got {mu}"
                    )));
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                eps_hat,
                ..
            } => {
                open_unit("beta1", beta1)?;
                open_unit("beta2", beta2)?;
                check_eps_hat(eps_hat)?;
            }
            OptimizerKind::Adagrad { eps_hat, .. } => check_eps_hat(eps_hat)?,
            OptimizerKind::RmsProp { rho, eps_hat, .. } => {
                open_unit("rho", rho)?;
                check_eps_hat(eps_hat)?;
            }
            _ => {}
        }
        Ok(())
    }

    fn state_slots(&self) -> usize {
        match self {
            OptimizerKind::Sngd { .. } | OptimizerKind::Sgd { .. } => 0,
            OptimizerKind::Adam { .. } => 2,
            _ => 1,
        }
    }
}

fn check_eps_hat(eps_hat: f64) -> Result<()> {
    if eps_hat > 0.0 && eps_hat.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidOptimizer(format!(
            "eps_hat must be positive, got {eps_hat}"
        )))
    }
}

/// Auxiliary buffers of one parameter matrix. `slots` holds, depending on
/// the rule, the velocity, the first and second moments, or the running
/// square accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    kind: &'static str,
    shape: (usize, usize),
    pub slots: Vec<DenseMatrix>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(kind: &OptimizerKind, shape: (usize, usize)) -> Self {
        Self {
            kind: kind.name(),
            shape,
            slots: (0..kind.state_slots())
                .map(|_| DenseMatrix::zeros(shape.0, shape.1))
                .collect(),
            t: 0,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }
}

/// Result of a single step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub weights: DenseMatrix,
    /// Set when the gradient was numerically zero and SNGD had no direction.
    pub skipped: bool,
}

fn check_step_inputs(w: &DenseMatrix, grad: &DenseMatrix) -> Result<()> {
    if w.shape() != grad.shape() {
        return Err(Error::ShapeMismatch {
            op: "optimizer step",
            left: w.shape(),
            right: grad.shape(),
        });
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(())
}

/// `g / ||g||_F`, or `None` for a zero gradient.
fn normalized(grad: &DenseMatrix) -> Option<DenseMatrix> {
    let norm = frobenius_norm(grad);
    if norm <= ZERO_GRAD_NORM {
        None
    } else {
        Some(grad.scale(1.0 / norm))
    }
}

fn finite_or_err(w: DenseMatrix) -> Result<DenseMatrix> {
    if w.is_finite() {
        Ok(w)
    } else {
        Err(Error::NonFinite("updated weights"))
    }
}

/// `w - eta * grad / ||grad||_F`; a zero gradient leaves `w` unchanged and
/// sets `skipped`.
pub fn sngd_step(w: &DenseMatrix, grad: &DenseMatrix, eta: f64) -> Result<Step> {
    check_step_inputs(w, grad)?;
    match normalized(grad) {
        Some(dir) => Ok(Step {
            weights: finite_or_err(w.scaled_add(-eta, &dir)?)?,
            skipped: false,
        }),
        None => Ok(Step {
            weights: w.clone(),
            skipped: true,
        }),
    }
}

/// `w - eta * grad`.
pub fn sgd_step(w: &DenseMatrix, grad: &DenseMatrix, eta: f64) -> Result<DenseMatrix> {
    check_step_inputs(w, grad)?;
    finite_or_err(w.scaled_add(-eta, grad)?)
}

/// One update of any rule. Sngd/Sgd ignore the (empty) state.
pub fn adaptive_step(
    kind: &OptimizerKind,
    state: &mut OptimizerState,
    w: &DenseMatrix,
    grad: &DenseMatrix,
) -> Result<Step> {
    check_step_inputs(w, grad)?;
    if state.kind != kind.name() {
        return Err(Error::OptimizerStateMismatch("optimizer kind"));
    }
    if state.shape != w.shape() || state.slots.len() != kind.state_slots() {
        return Err(Error::OptimizerStateMismatch("parameter shape"));
    }
    state.t += 1;
    let mut skipped = false;
    let weights = match *kind {
        OptimizerKind::Sngd { eta } => return sngd_step(w, grad, eta),
        OptimizerKind::Sgd { eta } => sgd_step(w, grad, eta)?,
        OptimizerKind::SgdMomentum { eta, mu } => {
            let v = state.slots[0].scale(mu).add(grad)?;
            let out = w.scaled_add(-eta, &v)?;
            state.slots[0] = v;
            out
        }
        OptimizerKind::SngdMomentum { eta, mu } => {
            let v = match normalized(grad) {
                Some(dir) => state.slots[0].scale(mu).add(&dir)?,
                None => {
                    skipped = true;
                    state.slots[0].scale(mu)
                }
            };
            let out = w.scaled_add(-eta, &v)?;
            state.slots[0] = v;
            out
        }
        OptimizerKind::Adam {
            eta,
            beta1,
            beta2,
            eps_hat,
        } => {
            let m = state.slots[0].zip_map(grad, "adam", |m, g| beta1 * m + (1.0 - beta1) * g)?;
            let v =
                state.slots[1].zip_map(grad, "adam", |v, g| beta2 * v + (1.0 - beta2) * g * g)?;
            let t = state.t as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            let mut out = w.clone();
            for ((o, &mi), &vi) in out.data_mut().iter_mut().zip(m.data()).zip(v.data()) {
                *o -= eta * (mi / c1) / ((vi / c2).sqrt() + eps_hat);
            }
            state.slots[0] = m;
            state.slots[1] = v;
            out
        }
        OptimizerKind::Adagrad { eta, eps_hat } => {
            let acc = state.slots[0].zip_map(grad, "adagrad", |a, g| a + g * g)?;
            let mut out = w.clone();
            for ((o, &g), &a) in out.data_mut().iter_mut().zip(grad.data()).zip(acc.data()) {
                *o -= eta * g / (a.sqrt() + eps_hat);
            }
            state.slots[0] = acc;
            out
        }
        OptimizerKind::RmsProp { eta, rho, eps_hat } => {
            let acc =
                state.slots[0].zip_map(grad, "rmsprop", |a, g| rho * a + (1.0 - rho) * g * g)?;
            let mut out = w.clone();
            for ((o, &g), &a) in out.data_mut().iter_mut().zip(grad.data()).zip(acc.data()) {
                *o -= eta * g / (a.sqrt() + eps_hat);
            }
            state.slots[0] = acc;
            out
        }
    };
    Ok(Step {
        weights: finite_or_err(weights)?,
        skipped,
    })
}

/// Iteration count, step size and minibatch size prescribed for SNGD on an
/// SLQC objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SngdParams {
    pub t_min: u64,
    pub eta: f64,
    /// Caller takes `max(b_min, b0)`.
    pub b_min: u64,
}

/// `T = ceil(kappa^2 dist0^2 / eps^2)`, `eta = eps / kappa`,
/// `b = ceil(M^2 ln(4T/delta) / (2 eps^2))`.
pub fn sngd_convergence_params(
    eps: f64,
    delta: f64,
    kappa: f64,
    m_bound: f64,
    dist0: f64,
) -> SngdParams {
    let ratio = kappa * dist0 / eps;
    let t_min = ceil_tol(ratio * ratio).max(1.0) as u64;
    let eta = eps / kappa;
    let b = m_bound * m_bound * (4.0 * t_min as f64 / delta).ln() / (2.0 * eps * eps);
    SngdParams {
        t_min,
        eta,
        b_min: ceil_tol(b).max(1.0) as u64,
    }
}

/// Ceiling that ignores a few ulps of rounding above an integer
/// (`(10 * 1 / 0.1)^2` is 10000.000000000002 in f64).
fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}
