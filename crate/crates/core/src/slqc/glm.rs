use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::nn::{act_eval, act_subgrad, loss_eval, ActivationKind, LossKind};
use crate::rng::{sample_in_ball, Rng};

/// Synthetic generalized linear model with planted weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GlmInstance {
    /// `m x d`, every row in the unit ball.
    pub inputs: DenseMatrix,
    /// `d x d'`.
    pub planted_weights: DenseMatrix,
    /// `m x d'`.
    pub targets: DenseMatrix,
    pub activation: ActivationKind,
    /// Additive noise on the targets, if any.
    pub noise: Option<DenseMatrix>,
    /// `||planted_weights||_F <= weight_bound`.
    pub weight_bound: f64,
}

impl GlmInstance {
    pub fn is_idealized(&self) -> bool {
        self.noise.is_none()
    }

    pub fn m(&self) -> usize {
        self.inputs.rows()
    }

    pub fn d(&self) -> usize {
        self.inputs.cols()
    }

    pub fn d_prime(&self) -> usize {
        self.targets.cols()
    }

    pub fn predict(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_weights(w)?;
        Ok(act_eval(self.activation, &self.inputs.matmul(w)?))
    }

    fn check_weights(&self, w: &DenseMatrix) -> Result<()> {
        if w.shape() != self.planted_weights.shape() {
            return Err(Error::ShapeMismatch {
                op: "glm weights",
                left: w.shape(),
                right: self.planted_weights.shape(),
            });
        }
        Ok(())
    }
}

pub(crate) fn unit_ball_rows(rng: &mut Rng, m: usize, d: usize) -> DenseMatrix {
    let zero = DenseMatrix::zeros(1, d);
    let mut data = Vec::with_capacity(m * d);
    for _ in 0..m {
        data.extend_from_slice(sample_in_ball(rng, &zero, 1.0).data());
    }
    DenseMatrix::new(m, d, data).expect("finite samples")
}

/// Inputs uniform in the unit ball, planted weights uniform in the
/// Frobenius ball of radius `weight_bound`, targets realized exactly.
pub fn generate_idealized_glm(
    rng: &mut Rng,
    d: usize,
    d_prime: usize,
    m: usize,
    weight_bound: f64,
    activation: ActivationKind,
) -> Result<GlmInstance> {
    activation.validate()?;
    if d == 0 || d_prime == 0 || m == 0 {
        return Err(Error::InvalidConfig("d, d' and m must be positive".into()));
    }
    if !(weight_bound.is_finite() && weight_bound > 0.0) {
        return Err(Error::InvalidConfig("weight bound must be positive".into()));
    }
    let planted = sample_in_ball(rng, &DenseMatrix::zeros(d, d_prime), weight_bound);
    let inputs = unit_ball_rows(rng, m, d);
    idealized_from(inputs, planted, activation, weight_bound)
}

pub(crate) fn idealized_from(
    inputs: DenseMatrix,
    planted: DenseMatrix,
    activation: ActivationKind,
    weight_bound: f64,
) -> Result<GlmInstance> {
    let targets = act_eval(activation, &inputs.matmul(&planted)?);
    Ok(GlmInstance {
        inputs,
        planted_weights: planted,
        targets,
        activation,
        noise: None,
        weight_bound,
    })
}

/// Single-output GLM with targets `phi(<w*, x>) + xi`, `xi ~ U[-s, s]`.
pub fn generate_noisy_glm(
    rng: &mut Rng,
    d: usize,
    m: usize,
    weight_bound: f64,
    activation: ActivationKind,
    noise_scale: f64,
) -> Result<GlmInstance> {
    if !(0.0..=1.0).contains(&noise_scale) {
        return Err(Error::InvalidConfig(format!(
            "noise scale must lie in [0, 1], got {noise_scale}"
        )));
    }
    let mut inst = generate_idealized_glm(rng, d, 1, m, weight_bound, activation)?;
    if noise_scale == 0.0 {
        return Ok(inst);
    }
    let xi = DenseMatrix::from_fn(m, 1, |_, _| rng.uniform_range(-noise_scale, noise_scale));
    inst.targets = inst.targets.add(&xi)?;
    inst.noise = Some(xi);
    Ok(inst)
}

/// `(1/m) sum_i ||y_i - phi(<W, x_i>)||^2`.
pub fn glm_error(instance: &GlmInstance, weights: &DenseMatrix) -> Result<f64> {
    let pred = instance.predict(weights)?;
    loss_eval(LossKind::MeanSquaredError, &pred, &instance.targets)
}

/// `(2/m) sum_i g(<w, x_i>) (phi(<w, x_i>) - y_i) x_i`, column by column.
pub fn glm_subgradient(instance: &GlmInstance, weights: &DenseMatrix) -> Result<DenseMatrix> {
    instance.check_weights(weights)?;
    let z = instance.inputs.matmul(weights)?;
    let g = act_subgrad(instance.activation, &z)?;
    let phi = act_eval(instance.activation, &z);
    let scale = 2.0 / instance.m() as f64;
    let mut coef = phi.sub(&instance.targets)?.hadamard(&g)?;
    coef.data_mut().iter_mut().for_each(|c| *c *= scale);
    instance.inputs.matmul_tn(&coef)
}

/// Squared error restricted to coordinates with positive pre-activation,
/// `(1/m) sum_i sum_{j: <w_j, x_i> > 0} (y_ij - phi(<w_j, x_i>))^2`.
pub fn active_error(instance: &GlmInstance, weights: &DenseMatrix) -> Result<f64> {
    instance.check_weights(weights)?;
    let z = instance.inputs.matmul(weights)?;
    let phi = act_eval(instance.activation, &z);
    let mut total = 0.0;
    for ((&zi, &p), &y) in z.data().iter().zip(phi.data()).zip(instance.targets.data()) {
        if zi > 0.0 {
            total += (y - p) * (y - p);
        }
    }
    Ok(total / instance.m() as f64)
}

fn ce_loss(instance: &GlmInstance) -> Result<LossKind> {
    match instance.activation {
        ActivationKind::Sigmoid => Ok(LossKind::BinaryCrossEntropy),
        ActivationKind::Softmax => Ok(LossKind::CategoricalCrossEntropy),
        other => Err(Error::InvalidConfig(format!(
            "cross-entropy needs a sigmoid or softmax GLM, got {other:?}"
        ))),
    }
}

/// Mean cross-entropy of the GLM predictions against its targets.
pub fn ce_error(instance: &GlmInstance, weights: &DenseMatrix) -> Result<f64> {
    let loss = ce_loss(instance)?;
    loss_eval(loss, &instance.predict(weights)?, &instance.targets)
}

/// `(1/m) sum_i x_i (p_i - y_i)^T`.
pub fn ce_gradient(instance: &GlmInstance, weights: &DenseMatrix) -> Result<DenseMatrix> {
    ce_loss(instance)?;
    let p = instance.predict(weights)?;
    let inv_m = 1.0 / instance.m() as f64;
    let resid = p.zip_map(&instance.targets, "ce_gradient", |p, y| (p - y) * inv_m)?;
    instance.inputs.matmul_tn(&resid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_norm;
    use crate::nn::{layer_gradient, predict, Batch, LayerSpec, NetworkSpec, NetworkState};
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn lrelu() -> ActivationKind {
        ActivationKind::leaky_relu()
    }

    #[test]
    fn planted_weights_have_zero_error() {
        let mut rng = Rng::new(1);
        for act in [
            lrelu(),
            ActivationKind::Sigmoid,
            ActivationKind::StandardRelu { b: 2.0 },
        ] {
            let inst = generate_idealized_glm(&mut rng, 4, 3, 50, 1.0, act).unwrap();
            assert_eq!(glm_error(&inst, &inst.planted_weights).unwrap(), 0.0);
            assert!(frobenius_norm(&inst.planted_weights) <= 1.0);
        }
    }

    #[test]
    fn hand_example() {
        let x = DenseMatrix::from_rows(&[[0.5]]).unwrap();
        let w = DenseMatrix::from_rows(&[[2.0]]).unwrap();
        let inst = idealized_from(x, w, lrelu(), 2.0).unwrap();
        assert_eq!(inst.targets[(0, 0)], 1.0);
    }

    #[test]
    fn inputs_lie_in_unit_ball() {
        let mut rng = Rng::new(2);
        let inst = generate_idealized_glm(&mut rng, 3, 1, 10_000, 1.0, lrelu()).unwrap();
        assert!(inst.inputs.row_norms().iter().all(|&n| n <= 1.0));
    }

    #[test]
    fn zero_weights_zero_targets_relu() {
        let inst = GlmInstance {
            inputs: DenseMatrix::from_rows(&[[0.1, 0.2], [-0.3, 0.4]]).unwrap(),
            planted_weights: DenseMatrix::zeros(2, 1),
            targets: DenseMatrix::zeros(2, 1),
            activation: ActivationKind::StandardRelu { b: 1.0 },
            noise: None,
            weight_bound: 1.0,
        };
        assert_eq!(glm_error(&inst, &DenseMatrix::zeros(2, 1)).unwrap(), 0.0);
    }

    #[test]
    fn noise_properties() {
        let mut a = Rng::new(3);
        let mut b = Rng::new(3);
        let clean = generate_idealized_glm(&mut a, 3, 1, 100, 1.0, lrelu()).unwrap();
        let same = generate_noisy_glm(&mut b, 3, 100, 1.0, lrelu(), 0.0).unwrap();
        assert_eq!(clean, same);

        let mut rng = Rng::new(4);
        let s = 0.3;
        let m = 100_000;
        let noisy = generate_noisy_glm(&mut rng, 2, m, 1.0, lrelu(), s).unwrap();
        let xi = noisy.noise.as_ref().unwrap();
        assert!(xi.data().iter().all(|v| v.abs() <= s));
        let mean = xi.sum() / m as f64;
        assert!(
            mean.abs() <= 3.0 * s / (m as f64).sqrt(),
            "noise mean {mean}"
        );
        let ideal = act_eval(
            lrelu(),
            &noisy.inputs.matmul(&noisy.planted_weights).unwrap(),
        );
        let diff = noisy.targets.sub(&ideal).unwrap().sub(xi).unwrap();
        assert!(diff.max_abs() < 1e-15);
        assert!(generate_noisy_glm(&mut rng, 2, 5, 1.0, lrelu(), 1.5).is_err());
    }

    #[test]
    fn error_matches_network_loss() {
        let mut rng = Rng::new(5);
        let inst = generate_idealized_glm(&mut rng, 4, 2, 30, 1.0, lrelu()).unwrap();
        let w = rng.normal_matrix(4, 2);
        let spec = NetworkSpec::new(
            vec![LayerSpec::new(4, 2, lrelu())],
            LossKind::MeanSquaredError,
        )
        .unwrap();
        let state = NetworkState::new(&spec, vec![w.clone()]).unwrap();
        let pred = predict(&spec, &state, &inst.inputs).unwrap();
        let via_net = loss_eval(LossKind::MeanSquaredError, &pred, &inst.targets).unwrap();
        assert!((glm_error(&inst, &w).unwrap() - via_net).abs() < 1e-14);

        let batch = Batch::new(inst.inputs.clone(), inst.targets.clone()).unwrap();
        let g_net = layer_gradient(&spec, &state, &batch, 0).unwrap();
        let g = glm_subgradient(&inst, &w).unwrap();
        for (a, b) in g.data().iter().zip(g_net.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_residual_subgradient() {
        let mut rng = Rng::new(6);
        let inst = generate_idealized_glm(&mut rng, 3, 2, 20, 1.0, lrelu()).unwrap();
        assert_eq!(
            glm_subgradient(&inst, &inst.planted_weights)
                .unwrap()
                .max_abs(),
            0.0
        );
    }

    #[test]
    fn ce_gradient_matches_network() {
        let mut rng = Rng::new(7);
        let inst =
            generate_idealized_glm(&mut rng, 3, 4, 25, 2.0, ActivationKind::Softmax).unwrap();
        let w = rng.normal_matrix(3, 4);
        let spec = NetworkSpec::new(
            vec![LayerSpec::new(3, 4, ActivationKind::Softmax)],
            LossKind::CategoricalCrossEntropy,
        )
        .unwrap();
        let state = NetworkState::new(&spec, vec![w.clone()]).unwrap();
        let batch = Batch::new(inst.inputs.clone(), inst.targets.clone()).unwrap();
        let g_net = layer_gradient(&spec, &state, &batch, 0).unwrap();
        let g = ce_gradient(&inst, &w).unwrap();
        for (a, b) in g.data().iter().zip(g_net.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    fn central_difference(f: impl Fn(&DenseMatrix) -> f64, w: &DenseMatrix, h: f64) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(w.rows(), w.cols());
        for k in 0..w.len() {
            let mut plus = w.clone();
            plus.data_mut()[k] += h;
            let mut minus = w.clone();
            minus.data_mut()[k] -= h;
            out.data_mut()[k] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn multi_output_error_is_sum_of_columns(seed in any::<u64>(), d_prime in 2usize..6) {
            let mut rng = Rng::new(seed);
            let inst = generate_idealized_glm(&mut rng, 4, d_prime, 40, 1.0, lrelu()).unwrap();
            let w = rng.normal_matrix(4, d_prime);
            let total = glm_error(&inst, &w).unwrap();
            let mut sum = 0.0;
            for j in 0..d_prime {
                let col = GlmInstance {
                    inputs: inst.inputs.clone(),
                    planted_weights: inst.planted_weights.column(j),
                    targets: inst.targets.column(j),
                    activation: inst.activation,
                    noise: None,
                    weight_bound: inst.weight_bound,
                };
                sum += glm_error(&col, &w.column(j)).unwrap();
            }
            prop_assert!((total - sum).abs() <= 1e-12);
        }

        #[test]
        fn sigmoid_subgradient_matches_finite_differences(seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let inst = generate_idealized_glm(&mut rng, 3, 2, 20, 1.0, ActivationKind::Sigmoid).unwrap();
            let w = rng.normal_matrix(3, 2);
            let g = glm_subgradient(&inst, &w).unwrap();
            let fd = central_difference(|w| glm_error(&inst, w).unwrap(), &w, 1e-6);
            let scale = frobenius_norm(&g).max(1e-8);
            prop_assert!(frobenius_norm(&g.sub(&fd).unwrap()) / scale < 1e-5);
        }
    }
}
