use std::fs;
use std::path::Path;

use dante_core::slqc::{certify, SuiteConfig, SuiteReport, Theorem};
use serde::{Deserialize, Serialize};

use crate::artifacts::{prepare_out_dir, write_text};
use crate::{CliError, Result};

pub const VERDICT_FILE: &str = "verdict.json";

/// A certification run: the theorem plus overrides of its default suite.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub theorem: Option<Theorem>,
    pub instances: Option<usize>,
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub d_prime_range: Option<(usize, usize)>,
    pub weight_bound: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub hidden: Option<usize>,
    pub outer_bound: Option<f64>,
    pub v_samples: Option<usize>,
    pub max_attempts: Option<usize>,
    pub kappa_scale: Option<f64>,
}

impl VerifyConfig {
    pub fn suite(&self) -> Result<SuiteConfig> {
        let theorem = self
            .theorem
            .ok_or_else(|| CliError::Config("missing `theorem`".into()))?;
        let mut s = SuiteConfig::default_for(theorem);
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { s.$f = v; })* };
        }
        set!(
            instances,
            seed,
            eps,
            d,
            m,
            d_prime_range,
            weight_bound,
            a,
            b,
            hidden,
            outer_bound,
            v_samples,
            max_attempts,
            kappa_scale
        );
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Debug, Serialize)]
struct Verdict<'a> {
    suite: &'a SuiteConfig,
    report: &'a SuiteReport,
    passed: bool,
}

/// `verify-slqc`: runs a certification suite. Passing means every requested
/// instance was admissible and none had a negative margin.
pub fn cmd_verify_slqc(
    config_path: &Path,
    out: Option<&Path>,
    force: bool,
    seed: Option<u64>,
) -> Result<SuiteReport> {
    let text =
        fs::read_to_string(config_path).map_err(|e| CliError::io(config_path.display(), e))?;
    let mut vc: VerifyConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    if seed.is_some() {
        vc.seed = seed;
    }
    let suite = vc.suite()?;
    if let Some(dir) = out {
        prepare_out_dir(dir, force)?;
    }
    let report = certify(&suite)?;
    let verdict = Verdict {
        suite: &suite,
        report: &report,
        passed: report.passed(),
    };
    let json =
        serde_json::to_string_pretty(&verdict).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(dir) = out {
        write_text(&dir.join(VERDICT_FILE), &(json.clone() + "\n"))?;
    }
    println!(
        "{}: {} requested, {} admissible, {} failures, min margin {}",
        suite.theorem.name(),
        report.requested,
        report.admissible,
        report.failures.len(),
        report
            .min_margin
            .map_or("n/a".to_string(), |m| format!("{m:e}"))
    );
    if !report.note.is_empty() {
        println!("note: {}", report.note);
    }
    if !report.failures.is_empty() {
        let seeds: Vec<String> = report.failures.iter().map(u64::to_string).collect();
        return Err(CliError::Certification(format!(
            "negative margins for instances {} (seed {}, instance i uses stream i)",
            seeds.join(","),
            suite.seed
        )));
    }
    if !report.passed() {
        return Err(CliError::Certification(format!(
            "only {} of {} instances satisfied the hypothesis",
            report.admissible, report.requested
        )));
    }
    Ok(report)
}
