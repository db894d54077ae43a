use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_inner, frobenius_norm, DenseMatrix};
use crate::rng::{sample_in_ball, Rng};

use super::glm::{ce_error, ce_gradient, glm_error, glm_subgradient, GlmInstance};

/// Margins above this are treated as non-negative.
pub const MARGIN_TOLERANCE: f64 = -1e-9;

/// A differentiable (or subdifferentiable) objective over weight matrices.
pub trait Objective {
    fn value(&self, w: &DenseMatrix) -> Result<f64>;
    fn gradient(&self, w: &DenseMatrix) -> Result<DenseMatrix>;
}

/// Which empirical error a GLM instance is scored with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlmLoss {
    Squared,
    CrossEntropy,
}

#[derive(Clone, Copy, Debug)]
pub struct GlmObjective<'a> {
    pub instance: &'a GlmInstance,
    pub loss: GlmLoss,
}

impl<'a> GlmObjective<'a> {
    pub fn squared(instance: &'a GlmInstance) -> Self {
        Self {
            instance,
            loss: GlmLoss::Squared,
        }
    }

    pub fn cross_entropy(instance: &'a GlmInstance) -> Self {
        Self {
            instance,
            loss: GlmLoss::CrossEntropy,
        }
    }
}

impl Objective for GlmObjective<'_> {
    fn value(&self, w: &DenseMatrix) -> Result<f64> {
        match self.loss {
            GlmLoss::Squared => glm_error(self.instance, w),
            GlmLoss::CrossEntropy => ce_error(self.instance, w),
        }
    }

    fn gradient(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        match self.loss {
            GlmLoss::Squared => glm_subgradient(self.instance, w),
            GlmLoss::CrossEntropy => ce_gradient(self.instance, w),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlqcParams {
    pub eps: f64,
    pub kappa: f64,
    pub minimizer: DenseMatrix,
}

impl SlqcParams {
    pub fn new(eps: f64, kappa: f64, minimizer: DenseMatrix) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eps must be positive, got {eps}"
            )));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kappa must be positive and finite, got {kappa}"
            )));
        }
        Ok(Self {
            eps,
            kappa,
            minimizer,
        })
    }

    pub fn radius(&self) -> f64 {
        self.eps / self.kappa
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlqcVerdict {
    pub point: DenseMatrix,
    pub condition1_holds: bool,
    pub condition2_holds: bool,
    /// `<G(w), w - v>` for every sampled `v`; the first entry is the
    /// extreme point along the gradient.
    pub inner_products: Vec<f64>,
    pub passed: bool,
}

impl SlqcVerdict {
    pub fn min_inner_product(&self) -> f64 {
        self.inner_products
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Tests both SLQC conditions at `w`. Condition 2 is probed at the ball
/// point `z + (eps/kappa) G/||G||`, where the linear form is smallest, and
/// at `n_ball_samples - 1` uniform points of the ball.
pub fn check_slqc<O: Objective + ?Sized>(
    objective: &O,
    params: &SlqcParams,
    w: &DenseMatrix,
    n_ball_samples: usize,
    rng: &mut Rng,
) -> Result<SlqcVerdict> {
    if n_ball_samples == 0 {
        return Err(Error::InvalidConfig(
            "n_ball_samples must be at least 1".into(),
        ));
    }
    if w.shape() != params.minimizer.shape() {
        return Err(Error::ShapeMismatch {
            op: "check_slqc",
            left: w.shape(),
            right: params.minimizer.shape(),
        });
    }
    let gap = objective.value(w)? - objective.value(&params.minimizer)?;
    let condition1_holds = gap <= params.eps;

    let g = objective.gradient(w)?;
    let g_norm = frobenius_norm(&g);
    let radius = params.radius();
    let mut inner_products = Vec::with_capacity(n_ball_samples);
    if g_norm > 0.0 {
        let extreme = params.minimizer.scaled_add(radius / g_norm, &g)?;
        inner_products.push(frobenius_inner(&g, &w.sub(&extreme)?)?);
    }
    while inner_products.len() < n_ball_samples {
        let v = sample_in_ball(rng, &params.minimizer, radius);
        inner_products.push(frobenius_inner(&g, &w.sub(&v)?)?);
    }
    let condition2_holds = g_norm > 0.0 && inner_products.iter().all(|&ip| ip >= MARGIN_TOLERANCE);
    Ok(SlqcVerdict {
        point: w.clone(),
        condition1_holds,
        condition2_holds,
        inner_products,
        passed: condition1_holds || condition2_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ActivationKind;
    use crate::slqc::glm::generate_idealized_glm;
    use crate::slqc::kappa::{kappa_for, KappaSetting};

    #[test]
    fn minimizer_satisfies_condition1() {
        let mut rng = Rng::new(0);
        let inst =
            generate_idealized_glm(&mut rng, 3, 1, 30, 1.0, ActivationKind::leaky_relu()).unwrap();
        let params = SlqcParams::new(0.05, 200.0, inst.planted_weights.clone()).unwrap();
        let v = check_slqc(
            &GlmObjective::squared(&inst),
            &params,
            &inst.planted_weights,
            5,
            &mut rng,
        )
        .unwrap();
        assert!(v.condition1_holds);
        assert!(v.passed);
        // zero gradient at the minimizer
        assert!(!v.condition2_holds);
    }

    #[test]
    fn extreme_point_is_the_minimum() {
        let mut rng = Rng::new(1);
        let inst =
            generate_idealized_glm(&mut rng, 4, 2, 40, 1.0, ActivationKind::Sigmoid).unwrap();
        let w = rng.normal_matrix(4, 2);
        let params = SlqcParams::new(0.1, 3.0, inst.planted_weights.clone()).unwrap();
        let v = check_slqc(&GlmObjective::squared(&inst), &params, &w, 500, &mut rng).unwrap();
        assert_eq!(v.inner_products.len(), 500);
        let first = v.inner_products[0];
        assert!(v.inner_products[1..].iter().all(|&ip| ip >= first - 1e-12));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SlqcParams::new(0.1, 0.0, DenseMatrix::zeros(1, 1)).is_err());
        assert!(SlqcParams::new(-1.0, 1.0, DenseMatrix::zeros(1, 1)).is_err());
        let mut rng = Rng::new(2);
        let inst = generate_idealized_glm(&mut rng, 2, 1, 5, 1.0, ActivationKind::Sigmoid).unwrap();
        let params = SlqcParams::new(0.1, 1.0, inst.planted_weights.clone()).unwrap();
        let obj = GlmObjective::squared(&inst);
        assert!(check_slqc(&obj, &params, &DenseMatrix::zeros(2, 1), 0, &mut rng).is_err());
        assert!(check_slqc(&obj, &params, &DenseMatrix::zeros(3, 1), 1, &mut rng).is_err());
    }

    #[test]
    fn theorem_one_instance_passes() {
        let act = ActivationKind::generalized_relu(0.01, 1.0).unwrap();
        let kappa = kappa_for(KappaSetting::GenReluGlm {
            a: 0.01,
            b: 1.0,
            w: 1.0,
        })
        .unwrap();
        let eps = 0.05;
        let mut checked = 0;
        for seed in 0..40u64 {
            let mut rng = Rng::new(seed);
            let inst = generate_idealized_glm(&mut rng, 5, 1, 200, 1.0, act).unwrap();
            let w = sample_in_ball(&mut rng, &DenseMatrix::zeros(5, 1), 1.0);
            if glm_error(&inst, &w).unwrap() < eps {
                continue;
            }
            let params = SlqcParams::new(eps, kappa, inst.planted_weights.clone()).unwrap();
            let v = check_slqc(&GlmObjective::squared(&inst), &params, &w, 200, &mut rng).unwrap();
            assert!(
                v.passed && v.condition2_holds,
                "seed {seed}: {}",
                v.min_inner_product()
            );
            checked += 1;
        }
        assert!(checked >= 5, "only {checked} admissible draws");
    }

    #[test]
    fn shrunken_kappa_breaks_the_check() {
        let act = ActivationKind::generalized_relu(0.01, 1.0).unwrap();
        let kappa = kappa_for(KappaSetting::GenReluGlm {
            a: 0.01,
            b: 1.0,
            w: 1.0,
        })
        .unwrap()
            / 1e4;
        let eps = 0.05;
        let found = (0..200u64).any(|seed| {
            let mut rng = Rng::new(seed);
            let inst = generate_idealized_glm(&mut rng, 5, 1, 200, 1.0, act).unwrap();
            let w = sample_in_ball(&mut rng, &DenseMatrix::zeros(5, 1), 1.0);
            let params = SlqcParams::new(eps, kappa, inst.planted_weights.clone()).unwrap();
            let v = check_slqc(&GlmObjective::squared(&inst), &params, &w, 1, &mut rng).unwrap();
            !v.passed
        });
        assert!(found);
    }
}
