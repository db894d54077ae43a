use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::nn::Batch;
use crate::rng::Rng;

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;
pub const MNIST_CLASSES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DatasetKind {
    Classification { classes: usize },
    Regression,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// Divide by the largest absolute value (255 for IDX images).
    #[default]
    ScaleToUnitRange,
    /// Rescale rows with norm above one onto the unit sphere.
    ProjectToUnitBall,
    /// Map each feature column affinely onto [0, 1]; constant columns become 0.
    MinMaxColumns,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: DenseMatrix,
    pub targets: DenseMatrix,
    pub kind: DatasetKind,
}

impl Dataset {
    pub fn new(inputs: DenseMatrix, targets: DenseMatrix, kind: DatasetKind) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::InvalidDataset(format!(
                "{} input rows but {} target rows",
                inputs.rows(),
                targets.rows()
            )));
        }
        if let DatasetKind::Classification { classes } = kind {
            if targets.cols() != classes {
                return Err(Error::InvalidDataset(format!(
                    "{classes} classes but {} target columns",
                    targets.cols()
                )));
            }
            for i in 0..targets.rows() {
                let row = targets.row(i);
                let ones = row.iter().filter(|&&v| v == 1.0).count();
                let zeros = row.iter().filter(|&&v| v == 0.0).count();
                if ones != 1 || zeros != classes - 1 {
                    return Err(Error::InvalidDataset(format!(
                        "target row {i} is not one-hot"
                    )));
                }
            }
        }
        Ok(Self {
            inputs,
            targets,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn batch(&self) -> Batch {
        Batch::new(self.inputs.clone(), self.targets.clone())
            .expect("row counts checked on construction")
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            inputs: self.inputs.select_rows(indices),
            targets: self.targets.select_rows(indices),
            kind: self.kind,
        }
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&idx)
    }
}

pub fn one_hot(labels: &[usize], classes: usize) -> Result<DenseMatrix> {
    if labels.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut out = DenseMatrix::zeros(labels.len(), classes);
    for (i, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::InvalidDataset(format!(
                "label {l} at row {i} outside 0..{classes}"
            )));
        }
        out[(i, l)] = 1.0;
    }
    Ok(out)
}

pub fn normalize(inputs: &DenseMatrix, mode: NormalizationMode) -> DenseMatrix {
    match mode {
        NormalizationMode::None => inputs.clone(),
        NormalizationMode::ScaleToUnitRange => {
            let max = inputs.max_abs();
            if max > 0.0 {
                inputs.scale(1.0 / max)
            } else {
                inputs.clone()
            }
        }
        NormalizationMode::ProjectToUnitBall => project_rows(inputs),
        NormalizationMode::MinMaxColumns => min_max_columns(inputs),
    }
}

fn project_rows(inputs: &DenseMatrix) -> DenseMatrix {
    let mut out = inputs.clone();
    let norms = inputs.row_norms();
    for (i, n) in norms.into_iter().enumerate() {
        if n > 1.0 {
            let row = out.row_mut(i);
            row.iter_mut().for_each(|v| *v /= n);
            // Division can leave the norm one ulp above 1.
            let again: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if again > 1.0 {
                row.iter_mut().for_each(|v| *v /= again);
            }
        }
    }
    out
}

fn min_max_columns(inputs: &DenseMatrix) -> DenseMatrix {
    let mut out = inputs.clone();
    for c in 0..inputs.cols() {
        let col = inputs.column(c);
        let lo = col.data().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for r in 0..inputs.rows() {
            out[(r, c)] = if span > 0.0 {
                (inputs[(r, c)] - lo) / span
            } else {
                0.0
            };
        }
    }
    out
}

fn be_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_be_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

fn read_idx(path: &Path, magic: u32, header_len: usize) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            needed: header_len,
            actual: bytes.len(),
        });
    }
    let found = be_u32(&bytes, 0);
    if found != magic {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    if bytes.len() < header_len {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            needed: header_len,
            actual: bytes.len(),
        });
    }
    Ok(bytes)
}

/// Reads an IDX image file and its label file. Images become rows of
/// `rows * cols` pixels; labels are one-hot over ten classes.
pub fn load_mnist_idx(
    images_path: &Path,
    labels_path: &Path,
    mode: NormalizationMode,
) -> Result<Dataset> {
    let images = read_idx(images_path, IDX_IMAGE_MAGIC, 16)?;
    let count = be_u32(&images, 4) as usize;
    let pixels = be_u32(&images, 8) as usize * be_u32(&images, 12) as usize;
    let needed = 16 + count * pixels;
    if images.len() < needed {
        return Err(Error::Truncated {
            path: images_path.to_path_buf(),
            needed,
            actual: images.len(),
        });
    }

    let labels = read_idx(labels_path, IDX_LABEL_MAGIC, 8)?;
    let label_count = be_u32(&labels, 4) as usize;
    if label_count != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    if labels.len() < 8 + count {
        return Err(Error::Truncated {
            path: labels_path.to_path_buf(),
            needed: 8 + count,
            actual: labels.len(),
        });
    }
    if count == 0 || pixels == 0 {
        return Err(Error::EmptyData);
    }

    let divisor = match mode {
        NormalizationMode::None => 1.0,
        _ => 255.0,
    };
    let data: Vec<f64> = images[16..needed]
        .iter()
        .map(|&p| p as f64 / divisor)
        .collect();
    let mut inputs = DenseMatrix::new(count, pixels, data)?;
    match mode {
        NormalizationMode::ProjectToUnitBall => inputs = project_rows(&inputs),
        NormalizationMode::MinMaxColumns => inputs = min_max_columns(&inputs),
        _ => {}
    }
    let label_vec: Vec<usize> = labels[8..8 + count].iter().map(|&l| l as usize).collect();
    let targets = one_hot(&label_vec, MNIST_CLASSES)?;
    Dataset::new(
        inputs,
        targets,
        DatasetKind::Classification {
            classes: MNIST_CLASSES,
        },
    )
}

/// Which columns of a delimited table are targets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetColumns {
    /// The trailing `n` columns.
    Last(usize),
    Indices(Vec<usize>),
}

impl Default for TargetColumns {
    fn default() -> Self {
        TargetColumns::Last(1)
    }
}

fn detect_delimiter(text: &str) -> u8 {
    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let mut best = (0, b',');
    for d in *b",\t;" {
        let n = line.bytes().filter(|&c| c == d).count();
        if n > best.0 {
            best = (n, d);
        }
    }
    best.1
}

/// Loads a numeric table with the delimiter inferred from the first line.
/// A first row with any non-numeric cell is taken as a header. For
/// classification the single target column holds integer class labels.
pub fn load_delimited(path: &Path, targets: &TargetColumns, kind: DatasetKind) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_delimited(&text, path, targets, kind)
}

fn parse_delimited(
    text: &str,
    path: &Path,
    targets: &TargetColumns,
    kind: DatasetKind,
) -> Result<Dataset> {
    let err = |line: usize, column: usize, message: String| Error::Delimited {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(text))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            err(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or(c + 1)
            })
            .collect();
        if rows.is_empty() && width.is_none() && parsed.iter().any(|p| p.is_err()) {
            // header
            width = Some(parsed.len());
            continue;
        }
        let expected = *width.get_or_insert(parsed.len());
        if parsed.len() != expected {
            return Err(err(
                line,
                parsed.len().min(expected) + 1,
                format!("expected {expected} fields, found {}", parsed.len()),
            ));
        }
        let mut row = Vec::with_capacity(expected);
        for (c, p) in parsed.into_iter().enumerate() {
            match p {
                Ok(v) => row.push(v),
                Err(col) => {
                    return Err(err(line, col, format!("non-numeric cell {:?}", &record[c])));
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    let ncols = rows[0].len();
    let target_idx: Vec<usize> = match targets {
        TargetColumns::Last(n) => {
            if *n == 0 || *n >= ncols {
                return Err(Error::InvalidDataset(format!(
                    "cannot take {n} target columns from {ncols}"
                )));
            }
            (ncols - n..ncols).collect()
        }
        TargetColumns::Indices(idx) => {
            if idx.is_empty() || idx.iter().any(|&i| i >= ncols) || idx.len() >= ncols {
                return Err(Error::InvalidDataset(format!(
                    "bad target columns {idx:?} for {ncols} columns"
                )));
            }
            idx.clone()
        }
    };
    let feature_idx: Vec<usize> = (0..ncols).filter(|c| !target_idx.contains(c)).collect();
    let m = rows.len();
    let inputs = DenseMatrix::from_fn(m, feature_idx.len(), |r, c| rows[r][feature_idx[c]]);
    let targets = match kind {
        DatasetKind::Regression => {
            DenseMatrix::from_fn(m, target_idx.len(), |r, c| rows[r][target_idx[c]])
        }
        DatasetKind::Classification { classes } => {
            if target_idx.len() != 1 {
                return Err(Error::InvalidDataset(
                    "classification needs exactly one label column".into(),
                ));
            }
            let mut labels = Vec::with_capacity(m);
            for row in &rows {
                let v = row[target_idx[0]];
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::InvalidDataset(format!(
                        "label {v} is not a class index"
                    )));
                }
                labels.push(v as usize);
            }
            one_hot(&labels, classes)?
        }
    };
    Dataset::new(inputs, targets, kind)
}

/// Writes features followed by targets, comma separated, with shortest
/// round-trip float formatting. Classification targets are written as labels.
pub fn write_delimited(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for i in 0..dataset.len() {
        let mut cells: Vec<String> = dataset
            .inputs
            .row(i)
            .iter()
            .map(|v| v.to_string())
            .collect();
        match dataset.kind {
            DatasetKind::Regression => {
                cells.extend(dataset.targets.row(i).iter().map(|v| v.to_string()))
            }
            DatasetKind::Classification { .. } => {
                cells.push(crate::nn::argmax(dataset.targets.row(i)).to_string());
            }
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Seeded partition into `floor(fraction * m)` and the remaining rows.
pub fn split(dataset: &Dataset, fraction: f64, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let m = dataset.len();
    let k = (fraction * m as f64).floor() as usize;
    if k == 0 || k == m {
        return Err(Error::InvalidConfig(format!(
            "split of {m} rows at {fraction} leaves an empty side"
        )));
    }
    let perm = rng.permutation(m);
    Ok((dataset.select(&perm[..k]), dataset.select(&perm[k..])))
}

/// Default MNIST location, overridable with `DANTE_MNIST_DIR`.
pub fn mnist_dir() -> PathBuf {
    std::env::var_os("DANTE_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("/root/data/mnist"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn idx_images(count: u32, r: u32, c: u32, pixels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for x in [IDX_IMAGE_MAGIC, count, r, c] {
            v.extend_from_slice(&x.to_be_bytes());
        }
        v.extend_from_slice(pixels);
        v
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut v = IDX_LABEL_MAGIC.to_be_bytes().to_vec();
        v.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        v.extend_from_slice(labels);
        v
    }

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, bytes).unwrap();
        p
    }

    #[test]
    fn idx_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = write(
            dir.path(),
            "i",
            &idx_images(2, 2, 2, &[0, 255, 51, 0, 1, 2, 3, 4]),
        );
        let labs = write(dir.path(), "l", &idx_labels(&[7, 0]));
        let ds = load_mnist_idx(&imgs, &labs, NormalizationMode::ScaleToUnitRange).unwrap();
        assert_eq!(ds.inputs.shape(), (2, 4));
        assert_eq!(ds.inputs[(0, 1)], 1.0);
        assert_eq!(ds.inputs[(0, 2)], 0.2);
        assert_eq!(ds.targets[(0, 7)], 1.0);
        assert_eq!(ds.targets.row(0).iter().sum::<f64>(), 1.0);
        let again = load_mnist_idx(&imgs, &labs, NormalizationMode::ScaleToUnitRange).unwrap();
        assert_eq!(ds, again);
        let raw = load_mnist_idx(&imgs, &labs, NormalizationMode::None).unwrap();
        assert_eq!(raw.inputs[(0, 1)], 255.0);
    }

    #[test]
    fn idx_errors() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = write(dir.path(), "i", &idx_images(2, 2, 2, &[0; 8]));
        let labs = write(dir.path(), "l", &idx_labels(&[1, 2]));
        let short = write(dir.path(), "s", &idx_images(2, 2, 2, &[0; 5]));
        let three = write(dir.path(), "t", &idx_labels(&[1, 2, 3]));
        assert!(matches!(
            load_mnist_idx(&labs, &labs, NormalizationMode::None),
            Err(Error::BadMagic { found: 0x801, .. })
        ));
        assert!(matches!(
            load_mnist_idx(&short, &labs, NormalizationMode::None),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            load_mnist_idx(&imgs, &three, NormalizationMode::None),
            Err(Error::CountMismatch {
                images: 2,
                labels: 3
            })
        ));
    }

    #[test]
    fn delimited_basic_and_header() {
        let p = Path::new("t.csv");
        let ds = parse_delimited(
            "1,2\n3,4\n5,6\n",
            p,
            &TargetColumns::Last(1),
            DatasetKind::Regression,
        )
        .unwrap();
        assert_eq!(ds.inputs.shape(), (3, 1));
        assert_eq!(ds.targets.data(), &[2.0, 4.0, 6.0]);
        let ds = parse_delimited(
            "a\tb\tc\n1\t2\t3\n",
            p,
            &TargetColumns::Last(1),
            DatasetKind::Regression,
        )
        .unwrap();
        assert_eq!(ds.inputs.data(), &[1.0, 2.0]);
        let ds = parse_delimited(
            "1;2;3\n",
            p,
            &TargetColumns::Indices(vec![0]),
            DatasetKind::Regression,
        )
        .unwrap();
        assert_eq!(ds.inputs.data(), &[2.0, 3.0]);
        assert_eq!(ds.targets.data(), &[1.0]);
    }

    #[test]
    fn delimited_errors_carry_location() {
        let p = Path::new("t.csv");
        match parse_delimited(
            "1,2\n3,4,5\n",
            p,
            &TargetColumns::Last(1),
            DatasetKind::Regression,
        ) {
            Err(Error::Delimited { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_delimited(
            "1,2\n3,x\n",
            p,
            &TargetColumns::Last(1),
            DatasetKind::Regression,
        ) {
            Err(Error::Delimited {
                line: 2, column: 2, ..
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classification_labels() {
        let p = Path::new("t.csv");
        let kind = DatasetKind::Classification { classes: 3 };
        let ds = parse_delimited("0.5,2\n0.1,0\n", p, &TargetColumns::Last(1), kind).unwrap();
        assert_eq!(ds.targets.row(0), &[0.0, 0.0, 1.0]);
        assert!(parse_delimited("0.5,3\n", p, &TargetColumns::Last(1), kind).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let inputs = DenseMatrix::from_fn(10, 1, |r, _| r as f64);
        let ds = Dataset::new(inputs.clone(), inputs, DatasetKind::Regression).unwrap();
        let (a, b) = split(&ds, 0.5, &mut Rng::new(1)).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        let mut seen: Vec<f64> = a
            .inputs
            .data()
            .iter()
            .chain(b.inputs.data())
            .copied()
            .collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..10).map(|v| v as f64).collect::<Vec<_>>());
        let (c, _) = split(&ds, 0.5, &mut Rng::new(1)).unwrap();
        assert_eq!(a, c);
        assert!(split(&ds, 0.01, &mut Rng::new(1)).is_err());
        assert!(split(&ds, 1.0, &mut Rng::new(1)).is_err());
    }

    proptest! {
        #[test]
        fn projection_bounds_rows(seed in any::<u64>(), scale in 0.1f64..1e3) {
            let mut rng = Rng::new(seed);
            let x = rng.normal_matrix(20, 7).scale(scale);
            let p = normalize(&x, NormalizationMode::ProjectToUnitBall);
            prop_assert!(p.row_norms().iter().all(|&n| n <= 1.0 + 1e-12));
        }

        #[test]
        fn delimited_roundtrip(seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let inputs = rng.normal_matrix(6, 3).scale(1e3);
            let targets = rng.normal_matrix(6, 2);
            let ds = Dataset::new(inputs, targets, DatasetKind::Regression).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("rt.csv");
            write_delimited(&p, &ds).unwrap();
            let back = load_delimited(&p, &TargetColumns::Last(2), DatasetKind::Regression).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
