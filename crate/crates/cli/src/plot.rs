//! Line plots of a metric against the weights-updated counter, as plain SVG.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use dante_core::MetricsRecord;

use crate::artifacts::{check_out_file, read_metrics_csv, write_text};
use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    #[value(name = "train_loss")]
    TrainLoss,
    #[default]
    #[value(name = "test_loss")]
    TestLoss,
    #[value(name = "test_accuracy")]
    TestAccuracy,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::TrainLoss => "train_loss",
            Metric::TestLoss => "test_loss",
            Metric::TestAccuracy => "test_accuracy",
        }
    }

    pub fn of(&self, r: &MetricsRecord) -> f64 {
        match self {
            Metric::TrainLoss => r.train_loss,
            Metric::TestLoss => r.test_loss,
            Metric::TestAccuracy => r.test_accuracy,
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// One polyline per series, axes with ticks and labels, and a legend.
/// Output depends only on the inputs.
pub fn render_svg(series: &[(String, Vec<(f64, f64)>)], y_label: &str) -> Result<String> {
    if series.is_empty() || series.iter().any(|(_, pts)| pts.is_empty()) {
        return Err(CliError::Config("nothing to plot".into()));
    }
    if series
        .iter()
        .flat_map(|(_, p)| p)
        .any(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(CliError::Config("non-finite values in plot input".into()));
    }
    let (x0, x1) = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let (y0, y1) = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">weights updated</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Legend name for a metrics file: its stem, or the directory name for
/// the default `metrics.csv`.
fn series_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if stem == "metrics" {
        if let Some(dir) = path.parent().and_then(Path::file_name) {
            return dir.to_string_lossy().into_owned();
        }
    }
    stem
}

/// `plot`: one series per CSV over (weights_updated, metric).
pub fn cmd_plot(csvs: &[PathBuf], out: &Path, force: bool, metric: Metric) -> Result<()> {
    if csvs.is_empty() {
        return Err(CliError::Config(
            "plot needs at least one metrics CSV".into(),
        ));
    }
    let mut series = Vec::with_capacity(csvs.len());
    for p in csvs {
        let records = read_metrics_csv(p)?;
        let pts = records
            .iter()
            .map(|r| (r.weights_updated as f64, metric.of(r)))
            .collect();
        series.push((series_name(p), pts));
    }
    let svg = render_svg(&series, metric.name())?;
    check_out_file(out, force)?;
    write_text(out, &svg)
}
