use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Pointwise (or, for softmax, row-wise) nonlinearity of a layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActivationKind {
    Sigmoid,
    /// `a*x` for `x <= 0`, `b*x` for `x > 0`, with `0 < a <= b`.
    GeneralizedRelu {
        a: f64,
        b: f64,
    },
    /// `0` for `x <= 0`, `b*x` otherwise.
    StandardRelu {
        b: f64,
    },
    Softmax,
    Identity,
}

impl ActivationKind {
    pub fn generalized_relu(a: f64, b: f64) -> Result<Self> {
        let k = ActivationKind::GeneralizedRelu { a, b };
        k.validate()?;
        Ok(k)
    }

    pub fn standard_relu(b: f64) -> Result<Self> {
        let k = ActivationKind::StandardRelu { b };
        k.validate()?;
        Ok(k)
    }

    /// Leaky ReLU with slope 0.01 on the negative side.
    pub fn leaky_relu() -> Self {
        ActivationKind::GeneralizedRelu { a: 0.01, b: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::GeneralizedRelu { a, b } => {
                if !(a.is_finite() && b.is_finite() && a > 0.0 && a <= b) {
                    return Err(Error::InvalidActivation(format!(
                        "generalized ReLU needs 0 < a <= b, got a={a}, b={b}"
                    )));
                }
            }
            ActivationKind::StandardRelu { b } if !(b.is_finite() && b > 0.0) => {
                return Err(Error::InvalidActivation(format!(
                    "standard ReLU needs b > 0, got b={b}"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    /// Scalar evaluation. Softmax has no scalar form and panics here.
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::GeneralizedRelu { a, b } => {
                if x <= 0.0 {
                    a * x
                } else {
                    b * x
                }
            }
            ActivationKind::StandardRelu { b } => {
                if x <= 0.0 {
                    0.0
                } else {
                    b * x
                }
            }
            ActivationKind::Identity => x,
            ActivationKind::Softmax => panic!("softmax is row-wise"),
        }
    }

    /// Scalar subgradient `g`; the kink at zero takes the right slope.
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            ActivationKind::GeneralizedRelu { a, b } => {
                if x < 0.0 {
                    a
                } else {
                    b
                }
            }
            ActivationKind::StandardRelu { b } => {
                if x < 0.0 {
                    0.0
                } else {
                    b
                }
            }
            ActivationKind::Identity => 1.0,
            ActivationKind::Softmax => panic!("softmax is row-wise"),
        }
    }

    pub fn is_softmax(&self) -> bool {
        matches!(self, ActivationKind::Softmax)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax_rows(z: &DenseMatrix) -> DenseMatrix {
    let mut out = z.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

pub fn act_eval(kind: ActivationKind, z: &DenseMatrix) -> DenseMatrix {
    match kind {
        ActivationKind::Softmax => softmax_rows(z),
        k => z.map(|x| k.apply(x)),
    }
}

pub fn act_subgrad(kind: ActivationKind, z: &DenseMatrix) -> Result<DenseMatrix> {
    match kind {
        ActivationKind::Softmax => Err(Error::SoftmaxSubgradient),
        k => Ok(z.map(|x| k.derivative(x))),
    }
}

/// Pulls `upstream = dL/da` back through the activation to `dL/dz`.
/// `a` is the activation output, used for the softmax Jacobian product.
pub(crate) fn backprop_activation(
    kind: ActivationKind,
    z: &DenseMatrix,
    a: &DenseMatrix,
    upstream: &DenseMatrix,
) -> DenseMatrix {
    match kind {
        ActivationKind::Softmax => {
            // J^T u = p * (u - <u, p>) row by row.
            let mut out = upstream.clone();
            for r in 0..out.rows() {
                let p = a.row(r);
                let dotp: f64 = upstream.row(r).iter().zip(p).map(|(u, p)| u * p).sum();
                for (o, &pi) in out.row_mut(r).iter_mut().zip(p) {
                    *o = pi * (*o - dotp);
                }
            }
            out
        }
        k => upstream
            .zip_map(z, "backprop_activation", |u, x| u * k.derivative(x))
            .expect("shapes agree by construction"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(v: f64) -> DenseMatrix {
        DenseMatrix::from_rows(&[[v]]).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(act_eval(ActivationKind::Sigmoid, &scalar(0.0))[(0, 0)], 0.5);
        let lr = ActivationKind::generalized_relu(0.01, 1.0).unwrap();
        assert!((act_eval(lr, &scalar(-2.0))[(0, 0)] + 0.02).abs() < 1e-15);
        assert_eq!(act_eval(lr, &scalar(3.0))[(0, 0)], 3.0);
        let sm = act_eval(
            ActivationKind::Softmax,
            &DenseMatrix::from_rows(&[[0.0, 0.0]]).unwrap(),
        );
        assert_eq!(sm.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn subgradient_examples() {
        let lr = ActivationKind::generalized_relu(0.01, 1.0).unwrap();
        assert_eq!(act_subgrad(lr, &scalar(0.0)).unwrap()[(0, 0)], 1.0);
        assert_eq!(
            act_subgrad(ActivationKind::Sigmoid, &scalar(0.0)).unwrap()[(0, 0)],
            0.25
        );
        let relu = ActivationKind::standard_relu(1.0).unwrap();
        assert_eq!(act_subgrad(relu, &scalar(-5.0)).unwrap()[(0, 0)], 0.0);
        assert!(matches!(
            act_subgrad(ActivationKind::Softmax, &scalar(0.0)),
            Err(Error::SoftmaxSubgradient)
        ));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ActivationKind::generalized_relu(0.0, 1.0).is_err());
        assert!(ActivationKind::generalized_relu(2.0, 1.0).is_err());
        assert!(ActivationKind::generalized_relu(-0.1, 1.0).is_err());
        assert!(ActivationKind::standard_relu(0.0).is_err());
        assert!(ActivationKind::generalized_relu(1.0, 1.0).is_ok());
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        assert!(sigmoid(-30.0) > 0.0 && sigmoid(30.0) < 1.0);
    }

    proptest! {
        #[test]
        fn generalized_relu_monotone_and_lipschitz(a in 1e-3f64..1.0, extra in 0.0f64..3.0, x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let b = a + extra;
            let k = ActivationKind::GeneralizedRelu { a, b };
            let (fx, fy) = (k.apply(x), k.apply(y));
            if x <= y { prop_assert!(fx <= fy); }
            prop_assert!((fx - fy).abs() <= b * (x - y).abs() * (1.0 + 1e-12));
        }

        #[test]
        fn generalized_relu_subgradient_values(a in 1e-3f64..1.0, extra in 0.0f64..3.0, x in -50.0f64..50.0) {
            let b = a + extra;
            let g = ActivationKind::GeneralizedRelu { a, b }.derivative(x);
            prop_assert!(g == a || g == b);
            prop_assert!(g >= a && a > 0.0);
        }

        #[test]
        fn sigmoid_co_coercive(z in -20.0f64..20.0, w in -20.0f64..20.0) {
            let d = sigmoid(z) - sigmoid(w);
            prop_assert!(d * (z - w) >= 4.0 * d * d - 1e-15);
        }

        #[test]
        fn two_class_softmax_co_coercive(z in -20.0f64..20.0, w in -20.0f64..20.0) {
            // With two classes p_1 = sigmoid(u1 - u2); taking logits (t, 0)
            // reduces the softmax coordinate to a scalar map of t.
            let p = |t: f64| {
                let s = act_eval(ActivationKind::Softmax, &DenseMatrix::from_rows(&[[t, 0.0]]).unwrap());
                s[(0, 0)]
            };
            let d = p(z) - p(w);
            prop_assert!(d * (z - w) >= 2.0 * d * d - 1e-15);
        }

        #[test]
        fn softmax_rows_are_distributions(vals in proptest::collection::vec(-30.0f64..30.0, 1..12)) {
            let z = DenseMatrix::from_rows(std::slice::from_ref(&vals)).unwrap();
            let s = act_eval(ActivationKind::Softmax, &z);
            prop_assert!((s.sum() - 1.0).abs() <= 1e-12);
            prop_assert!(s.data().iter().all(|&p| p > 0.0));
        }

        #[test]
        fn degenerate_relu_is_linear(c in 0.1f64..5.0, x in -100.0f64..100.0) {
            let k = ActivationKind::GeneralizedRelu { a: c, b: c };
            prop_assert_eq!(k.apply(x), c * x);
        }
    }
}
