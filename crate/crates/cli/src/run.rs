use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dante_core::data::{self, load_delimited, load_mnist_idx, split};
use dante_core::nn::predict;
use dante_core::rng::sample_in_ball;
use dante_core::slqc::{generate_idealized_glm, generate_noisy_glm};
use dante_core::{
    train, Batch, Dataset, DatasetKind, DenseMatrix, NetworkSpec, NetworkState, Rng, TrainData,
    TrainOutcome,
};

use crate::artifacts::{
    content_hash, encode_weights, prepare_out_dir, write_metrics_csv, Manifest, RunSummary,
    METRICS_FILE, WEIGHTS_FILE,
};
use crate::config::{DatasetConfig, ExperimentConfig};
use crate::{CliError, Result};

// Independent streams derived from the run seed. Stream 1 belongs to the
// trainer's minibatch sampler.
const DATA_STREAM: u64 = 2;
const SPLIT_STREAM: u64 = 3;
const INIT_STREAM: u64 = 4;

#[derive(Clone, Debug)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Option<Dataset>,
}

fn min_max_targets(ds: &mut Dataset) {
    let t = &mut ds.targets;
    for c in 0..t.cols() {
        let col = t.column(c);
        let lo = col.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for r in 0..t.rows() {
            t[(r, c)] = if span > 0.0 {
                (t[(r, c)] - lo) / span
            } else {
                0.0
            };
        }
    }
}

fn unit_ball_inputs(rng: &mut Rng, m: usize, d: usize) -> Result<DenseMatrix> {
    let zero = DenseMatrix::zeros(1, d);
    let mut data = Vec::with_capacity(m * d);
    for _ in 0..m {
        data.extend_from_slice(sample_in_ball(rng, &zero, 1.0).data());
    }
    Ok(DenseMatrix::new(m, d, data)?)
}

fn split_pair(ds: Dataset, fraction: f64, seed: u64) -> Result<PreparedData> {
    let (train, test) = split(&ds, fraction, &mut Rng::new(seed).fork(SPLIT_STREAM))?;
    Ok(PreparedData {
        train,
        test: Some(test),
    })
}

/// Loads or generates the configured data.
pub fn load_data(cfg: &ExperimentConfig, spec: &NetworkSpec, seed: u64) -> Result<PreparedData> {
    let mut data_rng = Rng::new(seed).fork(DATA_STREAM);
    let mut prepared = match &cfg.dataset {
        DatasetConfig::Mnist {
            dir,
            train_limit,
            test_limit,
            normalization,
        } => {
            let dir = dir.clone().unwrap_or_else(data::mnist_dir);
            let load = |images: &str, labels: &str, limit: &Option<usize>| -> Result<Dataset> {
                let ds = load_mnist_idx(&dir.join(images), &dir.join(labels), *normalization)?;
                Ok(match limit {
                    Some(n) => ds.head(*n),
                    None => ds,
                })
            };
            PreparedData {
                train: load(
                    "train-images-idx3-ubyte",
                    "train-labels-idx1-ubyte",
                    train_limit,
                )?,
                test: Some(load(
                    "t10k-images-idx3-ubyte",
                    "t10k-labels-idx1-ubyte",
                    test_limit,
                )?),
            }
        }
        DatasetConfig::Delimited {
            path,
            targets,
            task,
            normalization,
            scale_targets,
            split,
        } => {
            let raw = load_delimited(path, targets, *task)?;
            let inputs = data::normalize(&raw.inputs, *normalization);
            let mut ds = Dataset::new(inputs, raw.targets, raw.kind)?;
            if *scale_targets {
                min_max_targets(&mut ds);
            }
            split_pair(ds, *split, seed)?
        }
        DatasetConfig::Glm {
            d,
            m,
            d_prime,
            weight_bound,
            activation,
            noise,
            split,
        } => {
            let inst = if *noise > 0.0 {
                if *d_prime != 1 {
                    return Err(CliError::Config("noisy GLM data is single-output".into()));
                }
                generate_noisy_glm(&mut data_rng, *d, *m, *weight_bound, *activation, *noise)?
            } else {
                generate_idealized_glm(&mut data_rng, *d, *d_prime, *m, *weight_bound, *activation)?
            };
            let ds = Dataset::new(inst.inputs, inst.targets, DatasetKind::Regression)?;
            split_pair(ds, *split, seed)?
        }
        DatasetConfig::Teacher { m, split } => {
            let teacher = NetworkState::new(
                spec,
                spec.layers()
                    .iter()
                    .map(|l| {
                        let (r, c) = l.weight_shape();
                        data_rng.normal_matrix(r, c)
                    })
                    .collect(),
            )?;
            let x = unit_ball_inputs(&mut data_rng, *m, spec.input_dim())?;
            let y = predict(spec, &teacher, &x)?;
            split_pair(Dataset::new(x, y, DatasetKind::Regression)?, *split, seed)?
        }
    };
    if cfg.autoencoder {
        for ds in std::iter::once(&mut prepared.train).chain(prepared.test.as_mut()) {
            ds.targets = ds.inputs.clone();
            ds.kind = DatasetKind::Regression;
        }
    }
    for (what, ds) in std::iter::once(("training", &prepared.train))
        .chain(prepared.test.iter().map(|t| ("test", t)))
    {
        if ds.inputs.cols() != spec.input_dim() || ds.targets.cols() != spec.output_dim() {
            return Err(CliError::Config(format!(
                "{what} data is {} -> {} but the architecture is {} -> {}",
                ds.inputs.cols(),
                ds.targets.cols(),
                spec.input_dim(),
                spec.output_dim()
            )));
        }
    }
    Ok(prepared)
}

#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub spec: NetworkSpec,
    pub initial: NetworkState,
    pub outcome: TrainOutcome,
}

impl ExperimentRun {
    pub fn summary(&self, cfg: &ExperimentConfig) -> RunSummary {
        let last = self.outcome.metrics.last();
        RunSummary {
            scheduler: cfg.train.scheduler.name().to_string(),
            optimizer: cfg.train.optimizer.name().to_string(),
            steps: self.outcome.steps,
            weights_updated: self.outcome.weights_updated,
            am_iters: self.outcome.am_iters,
            skipped_steps: self.outcome.skipped_steps,
            budget_exhausted: self.outcome.budget_exhausted,
            final_train_loss: last.map_or(f64::NAN, |r| r.train_loss),
            final_test_loss: last.map_or(f64::NAN, |r| r.test_loss),
            final_test_accuracy: last.map_or(f64::NAN, |r| r.test_accuracy),
        }
    }
}

/// Validates, loads data, initializes and trains. Writes nothing.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let spec = cfg.validate()?;
    let seed = cfg.train.seed;
    let data = load_data(cfg, &spec, seed)?;
    let initial = NetworkState::init(&spec, &mut Rng::new(seed).fork(INIT_STREAM));
    let train_batch: Batch = data.train.batch();
    let test_batch: Option<Batch> = data.test.as_ref().map(Dataset::batch);
    log::info!(
        "training {} on {} rows ({} test), {} parameters",
        cfg.train.scheduler.name(),
        train_batch.len(),
        test_batch.as_ref().map_or(0, Batch::len),
        spec.param_count()
    );
    let outcome = train(
        &spec,
        &initial,
        TrainData::new(&train_batch, test_batch.as_ref()),
        &cfg.train,
    )?;
    Ok(ExperimentRun {
        spec,
        initial,
        outcome,
    })
}

fn run_name(cfg: &ExperimentConfig, out: &Path) -> String {
    cfg.name.clone().unwrap_or_else(|| {
        out.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into())
    })
}

/// `train`: runs the experiment and writes metrics, weights and manifest to
/// the output directory. A numerical failure still writes the last finite
/// state before reporting.
pub fn cmd_train(
    config_path: &Path,
    out: Option<&Path>,
    force: bool,
    seed: Option<u64>,
) -> Result<Manifest> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    let out: PathBuf = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set out_dir".into()))?;
    cfg.validate()?;
    prepare_out_dir(&out, force)?;
    let run = run_experiment(&cfg)?;

    let metrics_path = out.join(METRICS_FILE);
    write_metrics_csv(&metrics_path, &run.outcome.metrics)?;
    let weights = encode_weights(&run.outcome.state.weights);
    std::fs::write(out.join(WEIGHTS_FILE), &weights).map_err(|e| CliError::io(out.display(), e))?;
    let metrics_bytes =
        std::fs::read(&metrics_path).map_err(|e| CliError::io(metrics_path.display(), e))?;

    let config_json = serde_json::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let mut files = BTreeMap::new();
    files.insert(METRICS_FILE.to_string(), content_hash(&metrics_bytes));
    files.insert(WEIGHTS_FILE.to_string(), content_hash(&weights));
    let manifest = Manifest {
        name: run_name(&cfg, &out),
        seed: cfg.train.seed,
        status: if run.outcome.numeric_failure.is_some() {
            "numeric_failure".into()
        } else {
            "ok".into()
        },
        summary: run.summary(&cfg),
        content_hash: content_hash(config_json.as_bytes()),
        config: cfg,
        files,
    };
    manifest.write(&out)?;
    if let Some(msg) = &run.outcome.numeric_failure {
        return Err(CliError::Numeric(format!(
            "{msg}; last finite weights written to {}",
            out.join(WEIGHTS_FILE).display()
        )));
    }
    Ok(manifest)
}
