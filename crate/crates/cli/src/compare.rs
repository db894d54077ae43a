use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::artifacts::{check_out_file, write_text, Manifest};
use crate::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub run: String,
    pub scheduler: String,
    pub optimizer: String,
    pub eta: f64,
    pub weights_updated: u64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
}

fn row(dir: &Path) -> Result<CompareRow> {
    let m = Manifest::read(dir)?;
    Ok(CompareRow {
        run: m.name,
        scheduler: m.summary.scheduler,
        optimizer: m.summary.optimizer,
        eta: m.config.train.optimizer.eta(),
        weights_updated: m.summary.weights_updated,
        train_loss: m.summary.final_train_loss,
        test_loss: m.summary.final_test_loss,
        test_accuracy: m.summary.final_test_accuracy,
    })
}

/// Rows sorted by final test loss, ties by name.
pub fn compare_rows(dirs: &[PathBuf]) -> Result<Vec<CompareRow>> {
    if dirs.len() < 2 {
        return Err(CliError::Config(format!(
            "compare needs at least two run directories, got {}",
            dirs.len()
        )));
    }
    let mut rows = dirs.iter().map(|d| row(d)).collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.test_loss
            .total_cmp(&b.test_loss)
            .then_with(|| a.run.cmp(&b.run))
    });
    Ok(rows)
}

pub fn render_table(rows: &[CompareRow]) -> String {
    let header = [
        "run",
        "scheduler",
        "optimizer",
        "eta",
        "weights_updated",
        "train_loss",
        "test_loss",
        "test_accuracy",
    ];
    let cells: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.run.clone(),
                r.scheduler.clone(),
                r.optimizer.clone(),
                r.eta.to_string(),
                r.weights_updated.to_string(),
                format!("{:.6}", r.train_loss),
                format!("{:.6}", r.test_loss),
                format!("{:.4}", r.test_accuracy),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for c in &cells {
        for (w, v) in widths.iter_mut().zip(c) {
            *w = (*w).max(v.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, vals: Vec<&str>| {
        let padded: Vec<String> = vals
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:<w$}"))
            .collect();
        let _ = writeln!(out, "| {} |", padded.join(" | "));
    };
    line(&mut out, header.to_vec());
    let _ = writeln!(
        out,
        "|{}|",
        widths
            .iter()
            .map(|w| "-".repeat(w + 2))
            .collect::<Vec<_>>()
            .join("|")
    );
    for c in &cells {
        line(&mut out, c.iter().map(String::as_str).collect());
    }
    out
}

/// `compare`: table of final metrics across finished runs, printed and
/// optionally written to `out`.
pub fn cmd_compare(dirs: &[PathBuf], out: Option<&Path>, force: bool) -> Result<Vec<CompareRow>> {
    let rows = compare_rows(dirs)?;
    let table = render_table(&rows);
    if let Some(path) = out {
        check_out_file(path, force)?;
        write_text(path, &table)?;
    }
    print!("{table}");
    Ok(rows)
}
