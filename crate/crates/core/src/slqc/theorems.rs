use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_inner, frobenius_norm, DenseMatrix};
use crate::nn::{
    act_eval, layer_gradient, loss_eval, predict, ActivationKind, Batch, LayerSpec, LossKind,
    NetworkSpec, NetworkState,
};
use crate::rng::{sample_in_ball, Rng};

use super::check::{GlmObjective, Objective, MARGIN_TOLERANCE};
use super::glm::{
    active_error, generate_idealized_glm, idealized_from, unit_ball_rows, GlmInstance,
};
use super::kappa::{inner_layer_error_ceiling, inner_layer_min_eps, kappa_for, KappaSetting};

/// Relative slack on ball-membership checks, so that points placed exactly
/// on a sphere are not rejected by rounding.
const BALL_SLACK: f64 = 1e-9;

/// The quasi-convexity results that can be certified numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Single-output GLM, generalized ReLU, squared error.
    GenReluGlm,
    /// Single-output GLM, standard ReLU, squared error.
    StdReluGlm,
    /// Multi-output layer, generalized ReLU, squared error.
    MultiOutputGenRelu,
    /// Inner layer of a one-hidden-layer generalized-ReLU network.
    InnerLayer,
    /// Sigmoid GLM with binary cross-entropy.
    CeSigmoid,
    /// Softmax layer with categorical cross-entropy.
    CeSoftmax,
}

impl Theorem {
    pub const ALL: [Theorem; 6] = [
        Theorem::GenReluGlm,
        Theorem::StdReluGlm,
        Theorem::MultiOutputGenRelu,
        Theorem::InnerLayer,
        Theorem::CeSigmoid,
        Theorem::CeSoftmax,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Theorem::GenReluGlm => "gen_relu_glm",
            Theorem::StdReluGlm => "std_relu_glm",
            Theorem::MultiOutputGenRelu => "multi_output_gen_relu",
            Theorem::InnerLayer => "inner_layer",
            Theorem::CeSigmoid => "ce_sigmoid",
            Theorem::CeSoftmax => "ce_softmax",
        }
    }
}

/// Teacher-planted one-hidden-layer network with a single output. The outer
/// weights stay at their planted value; only the inner layer varies.
#[derive(Clone, Debug)]
pub struct InnerLayerInstance {
    pub batch: Batch,
    pub planted_inner: DenseMatrix,
    pub outer: DenseMatrix,
    pub a: f64,
    pub b: f64,
    pub w1_bound: f64,
    pub w2_bound: f64,
    spec: NetworkSpec,
}

impl InnerLayerInstance {
    pub fn new(
        inputs: DenseMatrix,
        planted_inner: DenseMatrix,
        outer: DenseMatrix,
        a: f64,
        b: f64,
        w1_bound: f64,
        w2_bound: f64,
    ) -> Result<Self> {
        let act = ActivationKind::generalized_relu(a, b)?;
        let (d, k) = planted_inner.shape();
        if outer.shape() != (k, 1) {
            return Err(Error::ShapeMismatch {
                op: "inner layer outer weights",
                left: outer.shape(),
                right: (k, 1),
            });
        }
        let spec = NetworkSpec::new(
            vec![LayerSpec::new(d, k, act), LayerSpec::new(k, 1, act)],
            LossKind::MeanSquaredError,
        )?;
        let teacher = NetworkState::new(&spec, vec![planted_inner.clone(), outer.clone()])?;
        let targets = predict(&spec, &teacher, &inputs)?;
        Ok(Self {
            batch: Batch::new(inputs, targets)?,
            planted_inner,
            outer,
            a,
            b,
            w1_bound,
            w2_bound,
            spec,
        })
    }

    fn state(&self, w1: &DenseMatrix) -> Result<NetworkState> {
        NetworkState::new(&self.spec, vec![w1.clone(), self.outer.clone()])
    }

    pub fn error(&self, w1: &DenseMatrix) -> Result<f64> {
        let pred = predict(&self.spec, &self.state(w1)?, &self.batch.inputs)?;
        loss_eval(LossKind::MeanSquaredError, &pred, &self.batch.targets)
    }

    pub fn gradient(&self, w1: &DenseMatrix) -> Result<DenseMatrix> {
        layer_gradient(&self.spec, &self.state(w1)?, &self.batch, 0)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn generate_inner_layer(
    rng: &mut Rng,
    d: usize,
    hidden: usize,
    m: usize,
    a: f64,
    b: f64,
    w1_bound: f64,
    w2_bound: f64,
) -> Result<InnerLayerInstance> {
    let w1 = sample_in_ball(rng, &DenseMatrix::zeros(d, hidden), w1_bound);
    let w2 = sample_in_ball(rng, &DenseMatrix::zeros(hidden, 1), w2_bound);
    let inputs = unit_ball_rows(rng, m, d);
    InnerLayerInstance::new(inputs, w1, w2, a, b, w1_bound, w2_bound)
}

/// A concrete instance together with the `eps` and `kappa` of the claim
/// being tested on it.
#[derive(Clone, Debug)]
pub enum TheoremProblem {
    Glm {
        theorem: Theorem,
        instance: GlmInstance,
        eps: f64,
        kappa: f64,
    },
    InnerLayer {
        instance: InnerLayerInstance,
        eps: f64,
        kappa: f64,
    },
}

impl TheoremProblem {
    /// Pairs a GLM instance with the constant of `theorem`.
    pub fn glm(theorem: Theorem, instance: GlmInstance, eps: f64) -> Result<Self> {
        let w = instance.weight_bound;
        let d_prime = instance.d_prime();
        let setting = match (theorem, instance.activation) {
            (
                Theorem::GenReluGlm | Theorem::MultiOutputGenRelu,
                ActivationKind::GeneralizedRelu { a, b },
            ) => KappaSetting::GenReluGlm { a, b, w },
            (Theorem::StdReluGlm, ActivationKind::StandardRelu { b }) => {
                KappaSetting::StdReluGlm { b, w }
            }
            (Theorem::CeSigmoid, ActivationKind::Sigmoid) => KappaSetting::CeSigmoid { eps },
            (Theorem::CeSoftmax, ActivationKind::Softmax) => {
                KappaSetting::CeSoftmax { eps, d_prime }
            }
            (Theorem::InnerLayer, _) => {
                return Err(Error::InvalidConfig(
                    "inner-layer problems are not GLMs".into(),
                ));
            }
            (t, act) => {
                return Err(Error::InvalidConfig(format!(
                    "{} does not apply to {act:?}",
                    t.name()
                )));
            }
        };
        let single = matches!(
            theorem,
            Theorem::GenReluGlm | Theorem::StdReluGlm | Theorem::CeSigmoid
        );
        if single && d_prime != 1 {
            return Err(Error::InvalidConfig(format!(
                "{} needs a single output, got {d_prime}",
                theorem.name()
            )));
        }
        if !instance.is_idealized() {
            return Err(Error::InvalidConfig(
                "certification needs an idealized instance".into(),
            ));
        }
        let kappa = kappa_for(setting)?;
        Ok(TheoremProblem::Glm {
            theorem,
            instance,
            eps,
            kappa,
        })
    }

    pub fn inner_layer(instance: InnerLayerInstance, eps: f64) -> Result<Self> {
        let kappa = kappa_for(KappaSetting::InnerLayer {
            a: instance.a,
            b: instance.b,
            w1: instance.w1_bound,
            w2: instance.w2_bound,
            eps,
        })?;
        Ok(TheoremProblem::InnerLayer {
            instance,
            eps,
            kappa,
        })
    }

    pub fn theorem(&self) -> Theorem {
        match self {
            TheoremProblem::Glm { theorem, .. } => *theorem,
            TheoremProblem::InnerLayer { .. } => Theorem::InnerLayer,
        }
    }

    pub fn eps(&self) -> f64 {
        match self {
            TheoremProblem::Glm { eps, .. } | TheoremProblem::InnerLayer { eps, .. } => *eps,
        }
    }

    pub fn kappa(&self) -> f64 {
        match self {
            TheoremProblem::Glm { kappa, .. } | TheoremProblem::InnerLayer { kappa, .. } => *kappa,
        }
    }

    /// Multiplies `kappa` by `factor`; values below one enlarge the ball.
    pub fn scale_kappa(&mut self, factor: f64) {
        match self {
            TheoremProblem::Glm { kappa, .. } | TheoremProblem::InnerLayer { kappa, .. } => {
                *kappa *= factor
            }
        }
    }

    pub fn radius(&self) -> f64 {
        self.eps() / self.kappa()
    }

    pub fn minimizer(&self) -> &DenseMatrix {
        match self {
            TheoremProblem::Glm { instance, .. } => &instance.planted_weights,
            TheoremProblem::InnerLayer { instance, .. } => &instance.planted_inner,
        }
    }

    fn weight_bound(&self) -> f64 {
        match self {
            TheoremProblem::Glm { instance, .. } => instance.weight_bound,
            TheoremProblem::InnerLayer { instance, .. } => instance.w1_bound,
        }
    }

    fn glm_objective<'a>(theorem: Theorem, instance: &'a GlmInstance) -> GlmObjective<'a> {
        match theorem {
            Theorem::CeSigmoid | Theorem::CeSoftmax => GlmObjective::cross_entropy(instance),
            _ => GlmObjective::squared(instance),
        }
    }

    /// Checks the theorem's hypotheses on `w` (not on `v`).
    pub fn check_hypothesis(&self, w: &DenseMatrix) -> Result<()> {
        let min = self.minimizer();
        if w.shape() != min.shape() {
            return Err(Error::ShapeMismatch {
                op: "theorem weights",
                left: w.shape(),
                right: min.shape(),
            });
        }
        let bound = self.weight_bound();
        let norm = frobenius_norm(w);
        if norm > bound * (1.0 + BALL_SLACK) {
            return Err(Error::Hypothesis(format!(
                "||w|| = {norm} exceeds the weight bound {bound}"
            )));
        }
        let eps = self.eps();
        match self {
            TheoremProblem::Glm {
                theorem, instance, ..
            } => match theorem {
                Theorem::GenReluGlm | Theorem::MultiOutputGenRelu => {
                    let need = eps * instance.d_prime() as f64;
                    let err = super::glm::glm_error(instance, w)?;
                    if err < need {
                        return Err(Error::Hypothesis(format!("error {err} below {need}")));
                    }
                }
                Theorem::StdReluGlm => {
                    let err = active_error(instance, w)?;
                    if err < eps {
                        return Err(Error::Hypothesis(format!(
                            "active-sample error {err} below {eps}"
                        )));
                    }
                }
                Theorem::CeSigmoid | Theorem::CeSoftmax => {
                    let need = per_sample_floor(*theorem, eps, instance.d_prime());
                    let pred = instance.predict(w)?;
                    for i in 0..instance.m() {
                        let gap: f64 = pred
                            .row(i)
                            .iter()
                            .zip(instance.targets.row(i))
                            .map(|(p, y)| (p - y) * (p - y))
                            .sum();
                        if gap < need {
                            return Err(Error::Hypothesis(format!(
                                "sample {i}: squared residual {gap} below {need}"
                            )));
                        }
                    }
                }
                Theorem::InnerLayer => unreachable!("inner layer is not a GLM problem"),
            },
            TheoremProblem::InnerLayer { instance, .. } => {
                let err = instance.error(w)?;
                if err < eps {
                    return Err(Error::Hypothesis(format!(
                        "error {err} below {eps} (largest attainable error is {})",
                        inner_layer_error_ceiling(instance.b, instance.w1_bound, instance.w2_bound)
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Objective for TheoremProblem {
    fn value(&self, w: &DenseMatrix) -> Result<f64> {
        match self {
            TheoremProblem::Glm {
                theorem, instance, ..
            } => Self::glm_objective(*theorem, instance).value(w),
            TheoremProblem::InnerLayer { instance, .. } => instance.error(w),
        }
    }

    fn gradient(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            TheoremProblem::Glm {
                theorem, instance, ..
            } => Self::glm_objective(*theorem, instance).gradient(w),
            TheoremProblem::InnerLayer { instance, .. } => instance.gradient(w),
        }
    }
}

/// Lower bound on each sample's squared residual implied by a per-sample
/// cross-entropy of at least `eps`: `c^2` for sigmoid and
/// `c^2 d' / (d' - 1)` for softmax, where `c = 1 - e^-eps`.
pub fn per_sample_floor(theorem: Theorem, eps: f64, d_prime: usize) -> f64 {
    let c = 1.0 - (-eps).exp();
    match theorem {
        Theorem::CeSoftmax => c * c * d_prime as f64 / (d_prime as f64 - 1.0),
        _ => c * c,
    }
}

/// `<G(w), w - v>` under the theorem's hypotheses: `w` must satisfy them
/// and `v` must lie in `B(w*, eps/kappa)`.
pub fn theorem_margin(problem: &TheoremProblem, w: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
    problem.check_hypothesis(w)?;
    if v.shape() != w.shape() {
        return Err(Error::ShapeMismatch {
            op: "theorem_margin",
            left: v.shape(),
            right: w.shape(),
        });
    }
    let dist = frobenius_norm(&v.sub(problem.minimizer())?);
    let r = problem.radius();
    if dist > r * (1.0 + BALL_SLACK) {
        return Err(Error::Hypothesis(format!(
            "||v - w*|| = {dist} exceeds eps/kappa = {r}"
        )));
    }
    let g = problem.gradient(w)?;
    frobenius_inner(&g, &w.sub(v)?)
}

/// Parameters of one certification run. `d_prime_range` is cycled over the
/// instance index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub theorem: Theorem,
    pub instances: usize,
    pub seed: u64,
    pub eps: f64,
    pub d: usize,
    pub m: usize,
    pub d_prime_range: (usize, usize),
    pub weight_bound: f64,
    /// Activation slopes; `a` is ignored for the standard ReLU.
    pub a: f64,
    pub b: f64,
    /// Inner-layer only: hidden width and outer weight bound.
    pub hidden: usize,
    pub outer_bound: f64,
    /// Random `v` per instance, on top of `w*` and the extreme point.
    pub v_samples: usize,
    /// Draws of `w` (or of the whole instance) before giving up.
    pub max_attempts: usize,
    pub kappa_scale: f64,
}

impl SuiteConfig {
    pub fn default_for(theorem: Theorem) -> Self {
        let base = SuiteConfig {
            theorem,
            instances: 100,
            seed: 0,
            eps: 0.05,
            d: 5,
            m: 200,
            d_prime_range: (1, 1),
            weight_bound: 1.0,
            a: 0.01,
            b: 1.0,
            hidden: 3,
            outer_bound: 1.0,
            v_samples: 16,
            max_attempts: 500,
            kappa_scale: 1.0,
        };
        match theorem {
            Theorem::GenReluGlm => base,
            Theorem::StdReluGlm => SuiteConfig { eps: 0.02, ..base },
            Theorem::MultiOutputGenRelu => SuiteConfig {
                eps: 0.01,
                d_prime_range: (2, 5),
                ..base
            },
            Theorem::InnerLayer => SuiteConfig {
                eps: 1.01
                    * inner_layer_min_eps(base.a, base.b, base.weight_bound, base.outer_bound),
                d: 4,
                m: 100,
                ..base
            },
            Theorem::CeSigmoid => SuiteConfig {
                eps: 0.1,
                d: 3,
                m: 100,
                weight_bound: 4.0,
                ..base
            },
            Theorem::CeSoftmax => SuiteConfig {
                eps: 0.1,
                d: 3,
                m: 100,
                weight_bound: 4.0,
                d_prime_range: (3, 5),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.d_prime_range;
        if self.instances == 0
            || self.d == 0
            || self.m == 0
            || self.max_attempts == 0
            || lo == 0
            || lo > hi
        {
            return Err(Error::InvalidConfig(
                "suite sizes must be positive and d_prime_range ordered".into(),
            ));
        }
        for (n, v) in [
            ("eps", self.eps),
            ("weight_bound", self.weight_bound),
            ("b", self.b),
            ("outer_bound", self.outer_bound),
            ("kappa_scale", self.kappa_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{n} must be positive, got {v}"
                )));
            }
        }
        if self.theorem == Theorem::CeSoftmax && lo < 2 {
            return Err(Error::InvalidConfig(
                "softmax needs at least 2 outputs".into(),
            ));
        }
        Ok(())
    }

    fn d_prime(&self, index: usize) -> usize {
        let (lo, hi) = self.d_prime_range;
        lo + index % (hi - lo + 1)
    }

    fn activation(&self) -> Result<ActivationKind> {
        match self.theorem {
            Theorem::GenReluGlm | Theorem::MultiOutputGenRelu | Theorem::InnerLayer => {
                ActivationKind::generalized_relu(self.a, self.b)
            }
            Theorem::StdReluGlm => ActivationKind::standard_relu(self.b),
            Theorem::CeSigmoid => Ok(ActivationKind::Sigmoid),
            Theorem::CeSoftmax => Ok(ActivationKind::Softmax),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub theorem: Theorem,
    pub requested: usize,
    /// Instances for which a hypothesis-satisfying `w` was found.
    pub admissible: usize,
    /// Indices of instances with a margin below the tolerance.
    pub failures: Vec<u64>,
    /// Smallest margin over all admissible instances; `None` if there were none.
    pub min_margin: Option<f64>,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub eps: f64,
    pub note: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.admissible >= self.requested && self.failures.is_empty()
    }
}

enum Outcome {
    Inadmissible { kappa: f64, max_error: f64 },
    Certified { kappa: f64, min_margin: f64 },
}

/// Builds one admissible `(problem, w)` pair, or reports the largest error seen.
fn draw(
    cfg: &SuiteConfig,
    rng: &mut Rng,
    index: usize,
) -> Result<std::result::Result<(TheoremProblem, DenseMatrix), (f64, f64)>> {
    let act = cfg.activation()?;
    let d_prime = cfg.d_prime(index);
    match cfg.theorem {
        Theorem::InnerLayer => {
            let inst = generate_inner_layer(
                rng,
                cfg.d,
                cfg.hidden,
                cfg.m,
                cfg.a,
                cfg.b,
                cfg.weight_bound,
                cfg.outer_bound,
            )?;
            let mut problem = TheoremProblem::inner_layer(inst, cfg.eps)?;
            problem.scale_kappa(cfg.kappa_scale);
            let mut max_error = 0.0f64;
            for _ in 0..cfg.max_attempts {
                let w = sample_in_ball(
                    rng,
                    &DenseMatrix::zeros(cfg.d, cfg.hidden),
                    cfg.weight_bound,
                );
                max_error = max_error.max(problem.value(&w)?);
                if problem.check_hypothesis(&w).is_ok() {
                    return Ok(Ok((problem, w)));
                }
            }
            Ok(Err((problem.kappa(), max_error)))
        }
        Theorem::CeSigmoid | Theorem::CeSoftmax => {
            let floor = per_sample_floor(cfg.theorem, cfg.eps, d_prime);
            let zero = DenseMatrix::zeros(cfg.d, d_prime);
            let mut kappa = f64::NAN;
            for _ in 0..cfg.max_attempts {
                let planted = sample_in_ball(rng, &zero, cfg.weight_bound);
                let w = sample_in_ball(rng, &zero, cfg.weight_bound);
                // Inputs are drawn after the weights and kept only where the
                // per-sample residual clears the floor.
                let mut rows = Vec::with_capacity(cfg.m * cfg.d);
                let mut kept = 0;
                for _ in 0..cfg.m * 50 {
                    let x = unit_ball_rows(rng, 1, cfg.d);
                    let p = act_eval(act, &x.matmul(&w)?);
                    let y = act_eval(act, &x.matmul(&planted)?);
                    let gap: f64 = p.sub(&y)?.data().iter().map(|v| v * v).sum();
                    if gap >= floor {
                        rows.extend_from_slice(x.data());
                        kept += 1;
                        if kept == cfg.m {
                            break;
                        }
                    }
                }
                if kept < cfg.m {
                    continue;
                }
                let inputs = DenseMatrix::new(cfg.m, cfg.d, rows)?;
                let inst = idealized_from(inputs, planted, act, cfg.weight_bound)?;
                let mut problem = TheoremProblem::glm(cfg.theorem, inst, cfg.eps)?;
                problem.scale_kappa(cfg.kappa_scale);
                kappa = problem.kappa();
                if problem.check_hypothesis(&w).is_ok() {
                    return Ok(Ok((problem, w)));
                }
            }
            Ok(Err((kappa, f64::NAN)))
        }
        _ => {
            let inst = generate_idealized_glm(rng, cfg.d, d_prime, cfg.m, cfg.weight_bound, act)?;
            let mut problem = TheoremProblem::glm(cfg.theorem, inst, cfg.eps)?;
            problem.scale_kappa(cfg.kappa_scale);
            let zero = DenseMatrix::zeros(cfg.d, d_prime);
            let mut max_error = 0.0f64;
            for _ in 0..cfg.max_attempts {
                let w = sample_in_ball(rng, &zero, cfg.weight_bound);
                max_error = max_error.max(problem.value(&w)?);
                if problem.check_hypothesis(&w).is_ok() {
                    return Ok(Ok((problem, w)));
                }
            }
            Ok(Err((problem.kappa(), max_error)))
        }
    }
}

fn run_instance(cfg: &SuiteConfig, index: usize) -> Result<Outcome> {
    let mut rng = Rng::new(cfg.seed).fork(index as u64);
    let (problem, w) = match draw(cfg, &mut rng, index)? {
        Ok(pair) => pair,
        Err((kappa, max_error)) => return Ok(Outcome::Inadmissible { kappa, max_error }),
    };
    let star = problem.minimizer().clone();
    let r = problem.radius();
    let g = problem.gradient(&w)?;
    let g_norm = frobenius_norm(&g);
    let mut vs = vec![star.clone()];
    if g_norm > 0.0 {
        vs.push(star.scaled_add(r / g_norm, &g)?);
    }
    for _ in 0..cfg.v_samples {
        vs.push(sample_in_ball(&mut rng, &star, r));
    }
    let mut min_margin = f64::INFINITY;
    for v in &vs {
        min_margin = min_margin.min(theorem_margin(&problem, &w, v)?);
    }
    Ok(Outcome::Certified {
        kappa: problem.kappa(),
        min_margin,
    })
}

/// Runs `cfg.instances` independent instances across threads. Each instance
/// owns `Rng::new(seed).fork(index)`, so the report does not depend on the
/// thread count.
pub fn certify(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let workers = thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(cfg.instances);
    let chunk = cfg.instances.div_ceil(workers);
    let outcomes: Vec<Result<Outcome>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|k| {
                s.spawn(move || {
                    let lo = k * chunk;
                    let hi = ((k + 1) * chunk).min(cfg.instances);
                    (lo..hi).map(|i| run_instance(cfg, i)).collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("certification worker panicked"))
            .collect()
    });

    let mut report = SuiteReport {
        theorem: cfg.theorem,
        requested: cfg.instances,
        admissible: 0,
        failures: Vec::new(),
        min_margin: None,
        kappa_min: f64::INFINITY,
        kappa_max: 0.0,
        eps: cfg.eps,
        note: String::new(),
    };
    let mut max_error = 0.0f64;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let (kappa, margin) = match outcome? {
            Outcome::Inadmissible {
                kappa,
                max_error: e,
            } => {
                if e.is_finite() {
                    max_error = max_error.max(e);
                }
                (kappa, None)
            }
            Outcome::Certified { kappa, min_margin } => (kappa, Some(min_margin)),
        };
        if kappa.is_finite() {
            report.kappa_min = report.kappa_min.min(kappa);
            report.kappa_max = report.kappa_max.max(kappa);
        }
        if let Some(m) = margin {
            report.admissible += 1;
            report.min_margin = Some(report.min_margin.map_or(m, |x: f64| x.min(m)));
            if m < MARGIN_TOLERANCE {
                report.failures.push(i as u64);
            }
        }
    }
    if cfg.theorem == Theorem::InnerLayer {
        let threshold = inner_layer_min_eps(cfg.a, cfg.b, cfg.weight_bound, cfg.outer_bound);
        let ceiling = inner_layer_error_ceiling(cfg.b, cfg.weight_bound, cfg.outer_bound);
        report.note = format!(
            "kappa is positive only for eps > {threshold}; largest attainable error is {ceiling}; \
             largest error observed {max_error}"
        );
    } else if report.admissible < report.requested {
        report.note = format!(
            "{} of {} instances found no hypothesis-satisfying point in {} attempts",
            report.requested - report.admissible,
            report.requested,
            cfg.max_attempts
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(theorem: Theorem) -> SuiteConfig {
        SuiteConfig {
            instances: 12,
            v_samples: 4,
            ..SuiteConfig::default_for(theorem)
        }
    }

    #[test]
    fn defaults_validate() {
        for t in Theorem::ALL {
            SuiteConfig::default_for(t).validate().unwrap();
        }
    }

    #[test]
    fn small_suites_pass() {
        for t in [
            Theorem::GenReluGlm,
            Theorem::StdReluGlm,
            Theorem::MultiOutputGenRelu,
            Theorem::CeSigmoid,
            Theorem::CeSoftmax,
        ] {
            let r = certify(&small(t)).unwrap();
            assert!(r.passed(), "{t:?}: {r:?}");
            assert!(r.min_margin.unwrap() >= MARGIN_TOLERANCE);
        }
    }

    #[test]
    fn inner_layer_has_no_admissible_instance() {
        let r = certify(&small(Theorem::InnerLayer)).unwrap();
        assert_eq!(r.admissible, 0);
        assert!(r.failures.is_empty());
        assert!(!r.passed());
        assert!(r.note.contains("largest attainable error"));
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = small(Theorem::MultiOutputGenRelu);
        assert_eq!(certify(&cfg).unwrap(), certify(&cfg).unwrap());
    }

    #[test]
    fn margin_rejects_points_outside_the_hypotheses() {
        let mut rng = Rng::new(3);
        let act = ActivationKind::leaky_relu();
        let inst = generate_idealized_glm(&mut rng, 3, 1, 50, 1.0, act).unwrap();
        let problem = TheoremProblem::glm(Theorem::GenReluGlm, inst, 0.05).unwrap();
        let star = problem.minimizer().clone();
        // w* has zero error
        assert!(matches!(
            theorem_margin(&problem, &star, &star),
            Err(Error::Hypothesis(_))
        ));
        let far = DenseMatrix::filled(3, 1, 10.0);
        assert!(matches!(
            theorem_margin(&problem, &far, &star),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn mismatched_theorem_and_activation() {
        let mut rng = Rng::new(4);
        let inst =
            generate_idealized_glm(&mut rng, 3, 1, 10, 1.0, ActivationKind::Sigmoid).unwrap();
        assert!(TheoremProblem::glm(Theorem::GenReluGlm, inst.clone(), 0.1).is_err());
        assert!(TheoremProblem::glm(Theorem::CeSigmoid, inst, 0.1).is_ok());
    }
}
