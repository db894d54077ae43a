//! Alternating-minimization schedules and the backprop baseline.
//!
//! Every scheduler is a list of phases. A phase names the layers it may
//! update; all other weight matrices are frozen for its duration. The
//! schedules differ only in how phases are ordered and repeated:
//!
//! * `SingleHidden`: outer layer, then inner layer, repeated.
//! * `RoundRobin`: layers input to output, repeated.
//! * `AutoencoderPairs`: (W_l, W_{2n-l+1}) trained as a one-hidden-layer
//!   net on the frozen activation `a_{l-1}`, outermost pair first.
//! * `FullBackprop`: one phase containing every layer.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::metrics::MetricsRecord;
use crate::nn::{self, Batch, LossKind, NetworkSpec, NetworkState};
use crate::optim::{adaptive_step, OptimizerKind, OptimizerState};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    SingleHidden,
    AutoencoderPairs,
    RoundRobin,
    FullBackprop,
}

impl Scheduler {
    pub fn name(&self) -> &'static str {
        match self {
            Scheduler::SingleHidden => "single_hidden",
            Scheduler::AutoencoderPairs => "autoencoder_pairs",
            Scheduler::RoundRobin => "round_robin",
            Scheduler::FullBackprop => "full_backprop",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub minibatch_size: usize,
    /// Inner-solver epochs per layer phase.
    #[serde(default = "default_t_sngd")]
    pub t_sngd: usize,
    /// Minimum number of alternating-minimization iterations.
    #[serde(default = "default_t_am")]
    pub t_am: usize,
    /// Keep iterating past `t_am` while the training loss moves by at least this.
    #[serde(default)]
    pub stop_eps: f64,
    #[serde(default = "default_max_am_iters")]
    pub max_am_iters: usize,
    #[serde(default)]
    pub seed: u64,
    pub scheduler: Scheduler,
    #[serde(default = "default_true")]
    pub sample_with_replacement: bool,
    /// Log a metrics record every this many optimizer steps (plus at every
    /// alternating-minimization boundary).
    #[serde(default = "default_log_interval")]
    pub log_interval: u64,
    /// Stop once the next step would push the weights-updated counter past this.
    #[serde(default)]
    pub weight_budget: Option<u64>,
    /// Zero-based layer order for `SingleHidden` / `RoundRobin`.
    #[serde(default)]
    pub phase_order: Option<Vec<usize>>,
}

fn default_t_sngd() -> usize {
    5
}
fn default_t_am() -> usize {
    1
}
fn default_max_am_iters() -> usize {
    100
}
fn default_true() -> bool {
    true
}
fn default_log_interval() -> u64 {
    50
}

impl TrainConfig {
    pub fn new(optimizer: OptimizerKind, scheduler: Scheduler) -> Self {
        Self {
            optimizer,
            minibatch_size: 32,
            t_sngd: default_t_sngd(),
            t_am: default_t_am(),
            stop_eps: 0.0,
            max_am_iters: default_max_am_iters(),
            seed: 0,
            scheduler,
            sample_with_replacement: true,
            log_interval: default_log_interval(),
            weight_budget: None,
            phase_order: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.minibatch_size == 0 {
            return Err(Error::InvalidConfig(
                "minibatch_size must be positive".into(),
            ));
        }
        if self.t_sngd == 0 || self.t_am == 0 || self.max_am_iters == 0 {
            return Err(Error::InvalidConfig(
                "t_sngd, t_am and max_am_iters must be positive".into(),
            ));
        }
        if self.max_am_iters < self.t_am {
            return Err(Error::InvalidConfig(format!(
                "max_am_iters ({}) must be at least t_am ({})",
                self.max_am_iters, self.t_am
            )));
        }
        if self.stop_eps.is_nan() || self.stop_eps < 0.0 {
            return Err(Error::InvalidConfig("stop_eps must be >= 0".into()));
        }
        if self.log_interval == 0 {
            return Err(Error::InvalidConfig("log_interval must be positive".into()));
        }
        Ok(())
    }
}

/// Ordered phases; each phase lists the layers it trains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasePlan {
    pub phases: Vec<Vec<usize>>,
}

impl PhasePlan {
    pub fn new(phases: Vec<Vec<usize>>, depth: usize) -> Result<Self> {
        let mut seen = vec![false; depth];
        for p in &phases {
            if p.is_empty() {
                return Err(Error::InvalidConfig("empty phase".into()));
            }
            for &l in p {
                if l >= depth {
                    return Err(Error::InvalidConfig(format!(
                        "phase references layer {l} of a {depth}-layer network"
                    )));
                }
                seen[l] = true;
            }
        }
        if let Some(l) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidConfig(format!("layer {l} is never trained")));
        }
        Ok(Self { phases })
    }

    fn one_per_layer(order: &[usize], depth: usize) -> Result<Self> {
        Self::new(order.iter().map(|&l| vec![l]).collect(), depth)
    }
}

/// Training and optional held-out data.
#[derive(Clone, Copy, Debug)]
pub struct TrainData<'a> {
    pub train: &'a Batch,
    pub test: Option<&'a Batch>,
}

impl<'a> TrainData<'a> {
    pub fn new(train: &'a Batch, test: Option<&'a Batch>) -> Self {
        Self { train, test }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub state: NetworkState,
    pub metrics: Vec<MetricsRecord>,
    pub steps: u64,
    pub weights_updated: u64,
    pub am_iters: usize,
    /// Steps whose gradient was numerically zero (no SNGD direction).
    pub skipped_steps: u64,
    pub budget_exhausted: bool,
    /// Set when a loss or update went non-finite; `state` is then the last
    /// finite one.
    pub numeric_failure: Option<String>,
}

struct Runner<'c> {
    cfg: &'c TrainConfig,
    rng: Rng,
    step: u64,
    weights_updated: u64,
    epoch: u64,
    skipped: u64,
    am_iters: usize,
    start: Instant,
    metrics: Vec<MetricsRecord>,
    budget_exhausted: bool,
    last_logged_step: Option<u64>,
}

/// A network together with the data it is fitted to and names for its
/// layers (the autoencoder schedule trains virtual sub-networks).
struct Problem<'p> {
    spec: &'p NetworkSpec,
    train: &'p Batch,
    test: Option<&'p Batch>,
    names: Vec<String>,
    label: String,
}

fn check_data(spec: &NetworkSpec, batch: &Batch, what: &str) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyData);
    }
    if batch.inputs.cols() != spec.input_dim() || batch.targets.cols() != spec.output_dim() {
        return Err(Error::InvalidConfig(format!(
            "{what} data is {}->{} but the network is {}->{}",
            batch.inputs.cols(),
            batch.targets.cols(),
            spec.input_dim(),
            spec.output_dim()
        )));
    }
    Ok(())
}

fn is_numeric(e: &Error) -> bool {
    matches!(e, Error::NonFinite(_))
}

/// Loss and accuracy of the prediction started from activation `input`
/// feeding layer `start`.
fn evaluate(
    spec: &NetworkSpec,
    state: &NetworkState,
    start: usize,
    input: &DenseMatrix,
    targets: &DenseMatrix,
) -> Result<(f64, f64)> {
    let pred = nn::forward_from(spec, state, start, input)?;
    let loss = nn::loss_eval(spec.loss(), &pred, targets)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok((loss, accuracy(&pred, targets)?))
}

/// Argmax accuracy; a single output column is thresholded at 0.5.
fn accuracy(pred: &DenseMatrix, targets: &DenseMatrix) -> Result<f64> {
    if pred.cols() > 1 {
        return nn::accuracy(pred, targets);
    }
    let hits = pred
        .data()
        .iter()
        .zip(targets.data())
        .filter(|(p, y)| (**p >= 0.5) == (**y >= 0.5))
        .count();
    Ok(hits as f64 / pred.rows() as f64)
}

/// Frozen-prefix activations `a_start` for train and test inputs.
struct Cache {
    start: usize,
    train: DenseMatrix,
    test: Option<DenseMatrix>,
}

impl Cache {
    fn build(problem: &Problem, state: &NetworkState, start: usize) -> Result<Self> {
        let prefix = |x: &DenseMatrix| -> Result<DenseMatrix> {
            if start == 0 {
                return Ok(x.clone());
            }
            let (spec, st) = truncated(problem.spec, state, start)?;
            Ok(nn::forward(&spec, &st, x)?.pop().expect("non-empty"))
        };
        Ok(Self {
            start,
            train: prefix(&problem.train.inputs)?,
            test: problem.test.map(|t| prefix(&t.inputs)).transpose()?,
        })
    }
}

/// First `n` layers as a standalone network. Only its forward pass is used,
/// so the loss label does not matter.
fn truncated(
    spec: &NetworkSpec,
    state: &NetworkState,
    n: usize,
) -> Result<(NetworkSpec, NetworkState)> {
    let idx: Vec<usize> = (0..n).collect();
    let sub = spec.sub_network(&idx, LossKind::MeanSquaredError)?;
    let st = NetworkState {
        weights: state.weights[..n].to_vec(),
    };
    Ok((sub, st))
}

impl<'c> Runner<'c> {
    fn new(cfg: &'c TrainConfig) -> Self {
        Self {
            cfg,
            rng: Rng::new(cfg.seed).fork(1),
            step: 0,
            weights_updated: 0,
            epoch: 0,
            skipped: 0,
            am_iters: 0,
            start: Instant::now(),
            metrics: Vec::new(),
            budget_exhausted: false,
            last_logged_step: None,
        }
    }

    fn log(
        &mut self,
        problem: &Problem,
        state: &NetworkState,
        cache: Option<&Cache>,
        phase: String,
    ) -> Result<()> {
        let (start, train_in, test_in) = match cache {
            Some(c) => (c.start, &c.train, c.test.as_ref()),
            None => (0, &problem.train.inputs, problem.test.map(|t| &t.inputs)),
        };
        let (train_loss, train_acc) =
            evaluate(problem.spec, state, start, train_in, &problem.train.targets)?;
        let (test_loss, test_accuracy) = match (problem.test, test_in) {
            (Some(t), Some(x)) => evaluate(problem.spec, state, start, x, &t.targets)?,
            _ => (train_loss, train_acc),
        };
        log::debug!(
            "step {} updated {} {phase}: train {train_loss:.6} test {test_loss:.6} acc {test_accuracy:.4}",
            self.step,
            self.weights_updated
        );
        self.metrics.push(MetricsRecord {
            step: self.step,
            weights_updated: self.weights_updated,
            epoch: self.epoch,
            phase,
            train_loss,
            test_loss,
            test_accuracy,
            wall_ms: self.start.elapsed().as_millis() as u64,
        });
        self.last_logged_step = Some(self.step);
        Ok(())
    }

    fn batches_for_epoch(&mut self, m: usize) -> Vec<Vec<usize>> {
        let b = self.cfg.minibatch_size;
        let steps = m.div_ceil(b);
        if self.cfg.sample_with_replacement {
            (0..steps)
                .map(|_| (0..b).map(|_| self.rng.index(m)).collect())
                .collect()
        } else {
            let perm = self.rng.permutation(m);
            perm.chunks(b).map(|c| c.to_vec()).collect()
        }
    }

    /// Runs `t_sngd` epochs of minibatch updates on `layers` only.
    fn run_phase(
        &mut self,
        problem: &Problem,
        state: &mut NetworkState,
        opt: &mut [OptimizerState],
        layers: &[usize],
        label: &str,
    ) -> Result<()> {
        let start = *layers.iter().min().expect("non-empty phase");
        let cache = Cache::build(problem, state, start)?;
        let per_step: u64 = layers
            .iter()
            .map(|&l| problem.spec.layers()[l].param_count() as u64)
            .sum();
        let m = problem.train.len();
        for _ in 0..self.cfg.t_sngd {
            for idx in self.batches_for_epoch(m) {
                if let Some(budget) = self.cfg.weight_budget {
                    if self.weights_updated + per_step > budget {
                        self.budget_exhausted = true;
                        return Ok(());
                    }
                }
                let x = cache.train.select_rows(&idx);
                let y = problem.train.targets.select_rows(&idx);
                let grads = nn::gradients_from(problem.spec, state, start, &x, &y, start)?;
                let mut updated = Vec::with_capacity(layers.len());
                for &l in layers {
                    let s = adaptive_step(
                        &self.cfg.optimizer,
                        &mut opt[l],
                        &state.weights[l],
                        &grads[l - start],
                    )?;
                    if s.skipped {
                        self.skipped += 1;
                    }
                    updated.push((l, s.weights));
                }
                for (l, w) in updated {
                    state.weights[l] = w;
                }
                self.step += 1;
                self.weights_updated += per_step;
                if self.step.is_multiple_of(self.cfg.log_interval) {
                    self.log(problem, state, Some(&cache), label.to_string())?;
                }
            }
            self.epoch += 1;
        }
        Ok(())
    }

    /// The alternating loop: repeat the plan while `|df| >= stop_eps` or
    /// fewer than `t_am` iterations have run, capped at `max_am_iters`.
    fn run_plan(
        &mut self,
        problem: &Problem,
        state: &mut NetworkState,
        plan: &PhasePlan,
    ) -> Result<()> {
        let mut opt: Vec<OptimizerState> = problem
            .spec
            .layers()
            .iter()
            .map(|l| OptimizerState::new(&self.cfg.optimizer, l.weight_shape()))
            .collect();
        let full_loss = |state: &NetworkState| -> Result<f64> {
            Ok(evaluate(
                problem.spec,
                state,
                0,
                &problem.train.inputs,
                &problem.train.targets,
            )?
            .0)
        };
        let mut prev = full_loss(state)?;
        let mut t = 0usize;
        loop {
            for phase in &plan.phases {
                let names: Vec<&str> = phase.iter().map(|&l| problem.names[l].as_str()).collect();
                let label = format!("{}am{}/{}", problem.label, t + 1, names.join("+"));
                self.run_phase(problem, state, &mut opt, phase, &label)?;
                if self.budget_exhausted {
                    break;
                }
            }
            t += 1;
            self.am_iters += 1;
            let cur = full_loss(state)?;
            if self.last_logged_step != Some(self.step) {
                self.log(problem, state, None, format!("{}am{}", problem.label, t))?;
            }
            let delta = (cur - prev).abs();
            log::info!(
                "{}am iteration {t}: loss {cur:.6} (change {delta:.3e})",
                problem.label
            );
            if self.budget_exhausted || t >= self.cfg.max_am_iters {
                break;
            }
            if !(delta >= self.cfg.stop_eps || t < self.cfg.t_am) {
                break;
            }
            prev = cur;
        }
        Ok(())
    }

    fn finish(self, state: NetworkState, failure: Option<String>) -> TrainOutcome {
        TrainOutcome {
            state,
            metrics: self.metrics,
            steps: self.step,
            weights_updated: self.weights_updated,
            am_iters: self.am_iters,
            skipped_steps: self.skipped,
            budget_exhausted: self.budget_exhausted,
            numeric_failure: failure,
        }
    }
}

fn layer_names(depth: usize) -> Vec<String> {
    (1..=depth).map(|l| format!("W{l}")).collect()
}

fn prepare(
    spec: &NetworkSpec,
    state: &NetworkState,
    data: &TrainData,
    cfg: &TrainConfig,
) -> Result<()> {
    cfg.validate()?;
    state.check(spec)?;
    check_data(spec, data.train, "training")?;
    if let Some(t) = data.test {
        check_data(spec, t, "test")?;
    }
    if cfg.minibatch_size > data.train.len() {
        return Err(Error::InvalidConfig(format!(
            "minibatch_size {} exceeds the {} training rows",
            cfg.minibatch_size,
            data.train.len()
        )));
    }
    Ok(())
}

/// Runs `body` and converts a non-finite failure into an outcome carrying
/// the last finite state.
fn drive(
    cfg: &TrainConfig,
    mut state: NetworkState,
    body: impl FnOnce(&mut Runner, &mut NetworkState) -> Result<()>,
) -> Result<TrainOutcome> {
    let mut runner = Runner::new(cfg);
    let mut working = state.clone();
    match body(&mut runner, &mut working) {
        Ok(()) => Ok(runner.finish(working, None)),
        Err(e) if is_numeric(&e) => {
            log::error!("numerical failure: {e}");
            // Keep the last state that still evaluates finitely.
            if working.weights.iter().all(DenseMatrix::is_finite) {
                state = working;
            }
            Ok(runner.finish(state, Some(e.to_string())))
        }
        Err(e) => Err(e),
    }
}

fn run_with_plan(
    spec: &NetworkSpec,
    state: &NetworkState,
    data: TrainData,
    plan: &PhasePlan,
    cfg: &TrainConfig,
    label: &str,
) -> Result<TrainOutcome> {
    prepare(spec, state, &data, cfg)?;
    let problem = Problem {
        spec,
        train: data.train,
        test: data.test,
        names: layer_names(spec.depth()),
        label: label.to_string(),
    };
    drive(cfg, state.clone(), |runner, st| {
        runner.log(&problem, st, None, "init".into())?;
        runner.run_plan(&problem, st, plan)
    })
}

/// One phase: `t_sngd` epochs updating only `layer_indices`.
pub fn train_layer_phase(
    spec: &NetworkSpec,
    state: &NetworkState,
    data: TrainData,
    layer_indices: &[usize],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    prepare(spec, state, &data, config)?;
    if layer_indices.is_empty() || layer_indices.iter().any(|&l| l >= spec.depth()) {
        return Err(Error::InvalidConfig(format!(
            "layer indices {layer_indices:?} invalid for a {}-layer network",
            spec.depth()
        )));
    }
    let problem = Problem {
        spec,
        train: data.train,
        test: data.test,
        names: layer_names(spec.depth()),
        label: String::new(),
    };
    let names: Vec<&str> = layer_indices
        .iter()
        .map(|&l| problem.names[l].as_str())
        .collect();
    let label = format!("phase/{}", names.join("+"));
    drive(config, state.clone(), |runner, st| {
        let mut opt: Vec<OptimizerState> = spec
            .layers()
            .iter()
            .map(|l| OptimizerState::new(&config.optimizer, l.weight_shape()))
            .collect();
        runner.log(&problem, st, None, "init".into())?;
        runner.run_phase(&problem, st, &mut opt, layer_indices, &label)?;
        if runner.last_logged_step != Some(runner.step) {
            runner.log(&problem, st, None, label.clone())?;
        }
        Ok(())
    })
}

/// Two-layer alternation: outer layer first, then inner layer, per iteration.
pub fn train_single_hidden(
    spec: &NetworkSpec,
    state: &NetworkState,
    data: TrainData,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if spec.depth() != 2 {
        return Err(Error::InvalidConfig(format!(
            "single-hidden-layer schedule needs 2 layers, got {}",
            spec.depth()
        )));
    }
    let order = config.phase_order.clone().unwrap_or_else(|| vec![1, 0]);
    let plan = PhasePlan::one_per_layer(&order, 2)?;
    run_with_plan(spec, state, data, &plan, config, "")
}

/// Layer-at-a-time sweeps, input to output by default.
pub fn train_round_robin(
    spec: &NetworkSpec,
    state: &NetworkState,
    data: TrainData,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let order = config
        .phase_order
        .clone()
        .unwrap_or_else(|| (0..spec.depth()).collect());
    let plan = PhasePlan::one_per_layer(&order, spec.depth())?;
    run_with_plan(spec, state, data, &plan, config, "")
}

/// Plain minibatch training of all layers at once.
pub fn train_backprop(
    spec: &NetworkSpec,
    state: &NetworkState,
    data: TrainData,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let plan = PhasePlan::new(vec![(0..spec.depth()).collect()], spec.depth())?;
    run_with_plan(spec, state, data, &plan, config, "backprop/")
}

fn check_autoencoder(spec: &NetworkSpec, data: &TrainData) -> Result<()> {
    let depth = spec.depth();
    if !depth.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "autoencoder schedule needs an even number of layers, got {depth}"
        )));
    }
    let layers = spec.layers();
    for l in 0..depth / 2 {
        let (a, b) = (&layers[l], &layers[depth - 1 - l]);
        if a.in_dim != b.out_dim || a.out_dim != b.in_dim {
            return Err(Error::InvalidConfig(format!(
                "layers {} and {} are not mirror images ({}->{} vs {}->{})",
                l + 1,
                depth - l,
                a.in_dim,
                a.out_dim,
                b.in_dim,
                b.out_dim
            )));
        }
    }
    for (what, batch) in [("training", Some(data.train)), ("test", data.test)] {
        if let Some(b) = batch {
            if b.inputs != b.targets {
                return Err(Error::InvalidConfig(format!(
                    "autoencoder {what} targets must equal inputs"
                )));
            }
        }
    }
    Ok(())
}

/// Symmetric autoencoder pairs, outermost first, each trained by the
/// two-layer alternation on the frozen activation `a_{l-1}` as both input
/// and target. No joint finetuning afterwards.
pub fn train_autoencoder_pairs(
    spec: &NetworkSpec,
    state: &NetworkState,
    data: TrainData,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    check_autoencoder(spec, &data)?;
    prepare(spec, state, &data, config)?;
    let depth = spec.depth();
    let n = depth / 2;
    let names = layer_names(depth);
    drive(config, state.clone(), |runner, st| {
        for l in 0..n {
            let pair = [l, depth - 1 - l];
            let loss = if l == 0 {
                spec.loss()
            } else {
                LossKind::MeanSquaredError
            };
            let sub_spec = spec.sub_network(&pair, loss)?;
            let mut sub_state = NetworkState {
                weights: vec![st.weights[pair[0]].clone(), st.weights[pair[1]].clone()],
            };
            // a_{l-1} through the already-trained outer layers.
            let frozen = |x: &DenseMatrix| -> Result<DenseMatrix> {
                if l == 0 {
                    return Ok(x.clone());
                }
                let (pre_spec, pre_state) = truncated(spec, st, l)?;
                Ok(nn::forward(&pre_spec, &pre_state, x)?
                    .pop()
                    .expect("non-empty"))
            };
            let a_train = frozen(&data.train.inputs)?;
            let train = Batch::new(a_train.clone(), a_train)?;
            let test = data
                .test
                .map(|t| -> Result<Batch> {
                    let a = frozen(&t.inputs)?;
                    Batch::new(a.clone(), a)
                })
                .transpose()?;
            let problem = Problem {
                spec: &sub_spec,
                train: &train,
                test: test.as_ref(),
                names: vec![names[pair[0]].clone(), names[pair[1]].clone()],
                label: format!("pair{}/", l + 1),
            };
            let order = config.phase_order.clone().unwrap_or_else(|| vec![1, 0]);
            let plan = PhasePlan::one_per_layer(&order, 2)?;
            runner.log(&problem, &sub_state, None, format!("pair{}/init", l + 1))?;
            let res = runner.run_plan(&problem, &mut sub_state, &plan);
            st.weights[pair[0]] = sub_state.weights[0].clone();
            st.weights[pair[1]] = sub_state.weights[1].clone();
            res?;
            if runner.budget_exhausted {
                break;
            }
        }
        Ok(())
    })
}

/// Dispatches on `config.scheduler`.
pub fn train(
    spec: &NetworkSpec,
    state: &NetworkState,
    data: TrainData,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    match config.scheduler {
        Scheduler::SingleHidden => train_single_hidden(spec, state, data, config),
        Scheduler::AutoencoderPairs => train_autoencoder_pairs(spec, state, data, config),
        Scheduler::RoundRobin => train_round_robin(spec, state, data, config),
        Scheduler::FullBackprop => train_backprop(spec, state, data, config),
    }
}
