//! Labeled numeric tables and the split bookkeeping around them.
//!
//! Two on-disk formats are supported: delimited numeric tables (CSV with an
//! optional header, label in a configurable column) and the sparse
//! `label idx:val ...` format common for gene-expression style data. Raw
//! class labels are arbitrary strings; a binary dataset maps the smaller of
//! the two (numerically when both parse as numbers, lexically otherwise) to
//! -1 and the larger to +1, and records the mapping in its provenance string.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Libsvm,
}

/// Which column of a delimited table holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Last,
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Last
    }
}

/// A parsed table before any label mapping: features plus raw label strings.
/// This is the entry point for multi-class files driven one-vs-rest.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub features: Array2<f64>,
    pub raw_labels: Vec<String>,
    pub feature_names: Option<Vec<String>>,
    pub source: String,
}

/// A binary-labeled sample matrix. Rows are samples, labels are exactly +-1.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Array1<f64>,
    pub feature_names: Option<Vec<String>>,
    pub source: String,
}

/// Fold membership for k-fold validation, reproducible from the seed.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub assignments: Vec<usize>,
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Array1<f64>,
        feature_names: Option<Vec<String>>,
        source: String,
    ) -> Result<Self> {
        let n = features.nrows();
        let d = features.ncols();
        if n == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if d == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        for (i, row) in features.rows().into_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { row: i + 1, col: j + 1 });
                }
            }
        }
        for y in labels.iter() {
            if *y != 1.0 && *y != -1.0 {
                return Err(Error::BadLabel(format!("class mark must be +-1, got {y}")));
            }
        }
        if let Some(names) = &feature_names {
            if names.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: names.len(),
                });
            }
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            source,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_pos(&self) -> usize {
        self.labels.iter().filter(|y| **y > 0.0).count()
    }

    pub fn n_neg(&self) -> usize {
        self.n() - self.n_pos()
    }

    pub fn has_both_classes(&self) -> bool {
        self.n_pos() > 0 && self.n_neg() > 0
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let d = self.dim();
        let mut feats = Array2::zeros((indices.len(), d));
        let mut labels = Array1::zeros(indices.len());
        for (row, &i) in indices.iter().enumerate() {
            feats.row_mut(row).assign(&self.features.row(i));
            labels[row] = self.labels[i];
        }
        Dataset {
            features: feats,
            labels,
            feature_names: self.feature_names.clone(),
            source: format!("{} (subset of {} rows)", self.source, indices.len()),
        }
    }
}

/// Loads a two-class table and maps its labels to +-1.
pub fn load_table<P: AsRef<Path>>(
    path: P,
    format: TableFormat,
    label_column: &LabelColumn,
) -> Result<Dataset> {
    RawTable::load(path, format, label_column)?.into_binary()
}

impl RawTable {
    pub fn load<P: AsRef<Path>>(
        path: P,
        format: TableFormat,
        label_column: &LabelColumn,
    ) -> Result<RawTable> {
        let path = path.as_ref();
        match format {
            TableFormat::Csv => load_csv(path, label_column),
            TableFormat::Libsvm => load_libsvm(path),
        }
    }

    /// Distinct raw labels in sorted order (numeric when possible).
    pub fn classes(&self) -> Vec<String> {
        let mut seen = BTreeMap::new();
        for l in &self.raw_labels {
            seen.entry(l.clone()).or_insert(0usize);
        }
        let mut out: Vec<String> = seen.into_keys().collect();
        out.sort_by(|a, b| compare_labels(a, b));
        out
    }

    /// Requires exactly two distinct labels; smaller maps to -1, larger to +1.
    pub fn into_binary(self) -> Result<Dataset> {
        let classes = self.classes();
        if classes.len() == 1 {
            return Err(Error::SingleClass);
        }
        if classes.len() != 2 {
            return Err(Error::BadLabel(format!(
                "expected exactly two class labels, found {}: {:?}",
                classes.len(),
                classes
            )));
        }
        let (neg, pos) = (&classes[0], &classes[1]);
        let labels = Array1::from_iter(
            self.raw_labels
                .iter()
                .map(|l| if l == pos { 1.0 } else { -1.0 }),
        );
        let mut source = self.source;
        let _ = write!(source, " (labels: {neg:?} -> -1, {pos:?} -> +1)");
        Dataset::new(self.features, labels, self.feature_names, source)
    }

    /// Binary view with `positive` against everything else pooled.
    pub fn one_vs_rest(&self, positive: &str) -> Result<Dataset> {
        if !self.raw_labels.iter().any(|l| l == positive) {
            return Err(Error::BadLabel(format!(
                "class {positive:?} does not occur in the table"
            )));
        }
        let labels = Array1::from_iter(
            self.raw_labels
                .iter()
                .map(|l| if l == positive { 1.0 } else { -1.0 }),
        );
        let source = format!("{} ({positive:?} vs rest)", self.source);
        Dataset::new(self.features.clone(), labels, self.feature_names.clone(), source)
    }
}

/// Numeric order when both labels parse as numbers, byte order otherwise.
fn compare_labels(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) if x != y => x.partial_cmp(&y).unwrap(),
        _ => a.cmp(b),
    }
}

fn load_csv(path: &Path, label_column: &LabelColumn) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::MalformedRow {
                row: 0,
                message: format!("{other:?}"),
            },
        })?;

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::MalformedRow {
            row: records.len() + 1,
            message: e.to_string(),
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }

    let width = records[0].len();
    let label_idx = match label_column {
        LabelColumn::Last => width.checked_sub(1).unwrap_or(0),
        LabelColumn::Index(i) => {
            if *i >= width {
                return Err(Error::LabelColumn(format!(
                    "label column index {i} out of range for {width} columns"
                )));
            }
            *i
        }
        LabelColumn::Name(name) => records[0]
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::LabelColumn(format!("no header column named {name:?}")))?,
    };

    // A header is any first row whose feature cells do not all parse as
    // numbers; naming the label column forces the header interpretation.
    let has_header = match label_column {
        LabelColumn::Name(_) => true,
        _ => !records[0]
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != label_idx)
            .all(|(_, f)| f.parse::<f64>().is_ok()),
    };

    let mut feature_names = None;
    let mut start = 0;
    if has_header {
        let names: Vec<String> = records[0]
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != label_idx)
            .map(|(_, f)| f.to_string())
            .collect();
        feature_names = Some(names);
        start = 1;
    }
    if records.len() <= start {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }

    let d = width - 1;
    if d == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    let n = records.len() - start;
    let mut features = Array2::zeros((n, d));
    let mut raw_labels = Vec::with_capacity(n);
    for (i, rec) in records[start..].iter().enumerate() {
        let file_row = start + i + 1;
        if rec.len() != width {
            return Err(Error::MalformedRow {
                row: file_row,
                message: format!("expected {} values, found {}", width, rec.len()),
            });
        }
        let mut col = 0;
        for (j, field) in rec.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::MalformedRow {
                row: file_row,
                message: format!("column {}: cannot parse {field:?} as a number", j + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: file_row,
                    col: j + 1,
                });
            }
            features[(i, col)] = v;
            col += 1;
        }
    }

    Ok(RawTable {
        features,
        raw_labels,
        feature_names,
        source: path.display().to_string(),
    })
}

fn load_libsvm(path: &Path) -> Result<RawTable> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<(String, Vec<(usize, f64)>)> = Vec::new();
    let mut d = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let file_row = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label = parts.next().unwrap().to_string();
        let mut entries = Vec::new();
        for tok in parts {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::MalformedRow {
                row: file_row,
                message: format!("expected index:value, got {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::MalformedRow {
                row: file_row,
                message: format!("bad feature index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(Error::MalformedRow {
                    row: file_row,
                    message: "feature indices start at 1".to_string(),
                });
            }
            let val: f64 = val.parse().map_err(|_| Error::MalformedRow {
                row: file_row,
                message: format!("cannot parse {val:?} as a number"),
            })?;
            if !val.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: file_row,
                    col: idx,
                });
            }
            d = d.max(idx);
            entries.push((idx - 1, val));
        }
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if d == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    let mut features = Array2::zeros((rows.len(), d));
    let mut raw_labels = Vec::with_capacity(rows.len());
    for (i, (label, entries)) in rows.into_iter().enumerate() {
        raw_labels.push(label);
        for (j, v) in entries {
            features[(i, j)] = v;
        }
    }
    Ok(RawTable {
        features,
        raw_labels,
        feature_names: None,
        source: path.display().to_string(),
    })
}

/// Writes a dataset as CSV with a header row; float formatting round-trips
/// exactly, so a write/load cycle reproduces the features bit for bit.
pub fn save_csv<P: AsRef<Path>>(ds: &Dataset, path: P) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut out = BufWriter::new(file);
    let d = ds.dim();
    match &ds.feature_names {
        Some(names) => {
            for name in names {
                write!(out, "{name},")?;
            }
        }
        None => {
            for j in 0..d {
                write!(out, "f{j},")?;
            }
        }
    }
    writeln!(out, "label")?;
    for i in 0..ds.n() {
        for j in 0..d {
            write!(out, "{},", ds.features[(i, j)])?;
        }
        writeln!(out, "{}", if ds.labels[i] > 0.0 { 1 } else { -1 })?;
    }
    out.flush()?;
    Ok(())
}

/// Subtracts column means. Returns the centered dataset and the mean vector;
/// a second correction pass keeps the residual means below 1e-12.
pub fn center(ds: &Dataset) -> (Dataset, Array1<f64>) {
    let n = ds.n() as f64;
    let mut features = ds.features.clone();
    let mean = features.sum_axis(ndarray::Axis(0)) / n;
    features -= &mean;
    let residual = features.sum_axis(ndarray::Axis(0)) / n;
    features -= &residual;
    let centered = Dataset {
        features,
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
        source: ds.source.clone(),
    };
    (centered, mean + residual)
}

/// Assigns samples to k folds. Stratified mode shuffles each class separately
/// and deals round-robin, so per-fold class counts differ by at most one.
pub fn make_splits(ds: &Dataset, k: usize, stratified: bool, seed: u64) -> Result<SplitPlan> {
    if k < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: k });
    }
    let n = ds.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0usize; n];
    if stratified {
        let pos: Vec<usize> = (0..n).filter(|&i| ds.labels[i] > 0.0).collect();
        let neg: Vec<usize> = (0..n).filter(|&i| ds.labels[i] < 0.0).collect();
        for class in [&pos, &neg] {
            if !class.is_empty() && class.len() < k {
                return Err(Error::TooFewSamples {
                    needed: k,
                    got: class.len(),
                });
            }
        }
        let mut dealt = 0usize;
        for class in [pos, neg] {
            let mut idx = class;
            idx.shuffle(&mut rng);
            for i in idx {
                assignments[i] = dealt % k;
                dealt += 1;
            }
        }
    } else {
        if n < k {
            return Err(Error::TooFewSamples { needed: k, got: n });
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            assignments[i] = pos % k;
        }
    }
    Ok(SplitPlan {
        assignments,
        k,
        seed,
        stratified,
    })
}

impl SplitPlan {
    /// Indices held out in `fold` and the complementary training indices.
    pub fn fold_indices(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        assert!(fold < self.k, "fold {fold} out of range for k={}", self.k);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(i)
            } else {
                train.push(i)
            }
        }
        (train, test)
    }
}
