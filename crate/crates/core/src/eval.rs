//! Flow CSV ingestion and equivalence metrics for the prime classifier.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::discretize_instance;
use crate::error::{Error, Result};
use crate::explain::VerifiedRules;
use crate::instance::RowView;
use crate::model::TreeModel;
use crate::primes::Side;
use crate::scalar::Scalar;

/// Header aliases and the name of the ground-truth column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(default = "default_label_column")]
    pub label_column: String,
    /// Header as found in the file → canonical feature name.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

fn default_label_column() -> String {
    "Label".into()
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig { label_column: default_label_column(), aliases: BTreeMap::new() }
    }
}

impl SchemaConfig {
    pub fn from_json(doc: &str) -> Result<Self> {
        Ok(serde_json::from_str(doc)?)
    }

    pub fn canonical<'a>(&'a self, header: &'a str) -> &'a str {
        self.aliases.get(header).map(String::as_str).unwrap_or(header)
    }
}

/// Feature columns as numbers, plus the optional label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Vec<T>>,
    labels: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Vec<String>, rows: Vec<Vec<T>>, labels: Option<Vec<String>>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != features.len()) {
            return Err(Error::Data("row width differs from header".into()));
        }
        if labels.as_ref().is_some_and(|l| l.len() != rows.len()) {
            return Err(Error::Data("label count differs from row count".into()));
        }
        let index = features.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        Ok(Dataset { features, index, rows, labels })
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> RowView<'_, T> {
        RowView { columns: &self.index, values: &self.rows[i] }
    }

    pub fn rows(&self) -> impl Iterator<Item = RowView<'_, T>> + '_ {
        (0..self.rows.len()).map(|i| self.row(i))
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Writes canonical headers and, when present, the label column last.
    pub fn write_csv<W: std::io::Write>(&self, out: W, label_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.features.clone();
        if self.labels.is_some() {
            header.push(label_column.to_string());
        }
        w.write_record(&header)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(l) = &self.labels {
                rec.push(l[i].clone());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| Error::Io { path: "<csv output>".into(), source })?;
        Ok(())
    }
}

/// Reads a flow CSV. With `required` empty every non-label column is a feature.
pub fn load_flows<T: Scalar>(path: &Path, schema: &SchemaConfig, required: &[String]) -> Result<Dataset<T>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    read_flows(file, schema, required)
}

pub fn read_flows<T: Scalar, R: Read>(input: R, schema: &SchemaConfig, required: &[String]) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| schema.canonical(h).to_string()).collect();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Data("empty file".into()));
    }
    let label_at = headers.iter().position(|h| *h == schema.label_column);
    let features: Vec<String> = if required.is_empty() {
        headers.iter().filter(|h| **h != schema.label_column).cloned().collect()
    } else {
        required.to_vec()
    };
    let columns = features
        .iter()
        .map(|f| {
            headers
                .iter()
                .position(|h| h == f)
                .ok_or_else(|| Error::Data(format!("missing required column `{f}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut labels = label_at.map(|_| Vec::new());
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = columns
            .iter()
            .zip(&features)
            .map(|(&c, name)| {
                let cell = record.get(c).unwrap_or("");
                cell.parse::<T>().map_err(|_| Error::DataCell {
                    row: r + 1,
                    column: name.clone(),
                    message: format!("`{cell}` is not a number"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
        if let (Some(ls), Some(i)) = (labels.as_mut(), label_at) {
            ls.push(record.get(i).unwrap_or("").to_string());
        }
    }
    Dataset::new(features, rows, labels)
}

/// One-vs-rest confusion counts and ratios; `None` marks a zero denominator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: String,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ClassMetrics {
    pub fn from_counts(label: impl Into<String>, tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ClassMetrics {
            label: label.into(),
            tp,
            fp,
            tn,
            fn_,
            tpr: ratio(tp, tp + fn_),
            fpr: ratio(fp, fp + tn),
            recall: ratio(tp, tp + fn_),
            precision: ratio(tp, tp + fp),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub target: String,
    pub rows: u64,
    /// Fraction of rows where the prime classifier and the tree agree.
    pub agreement: f64,
    pub disagreements: u64,
    /// Present when the dataset carries ground truth.
    pub classes: Vec<ClassMetrics>,
}

fn pct(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{:.2}%", 100.0 * x))
}

fn dec(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.4}"))
}

impl MetricsReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "target {}: {} rows, agreement with tree {:.4} ({} disagreements)\n",
            self.target, self.rows, self.agreement, self.disagreements
        );
        if self.classes.is_empty() {
            out.push_str("no ground-truth column; class metrics skipped\n");
            return out;
        }
        let w = self.classes.iter().map(|c| c.label.chars().count()).max().unwrap_or(0).max(5);
        let _ = writeln!(out, "{:<w$}  {:>8}  {:>8}  {:>7}  {:>9}  {:>7}", "class", "TPR", "FPR", "recall", "precision", "F1");
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:<w$}  {:>8}  {:>8}  {:>7}  {:>9}  {:>7}",
                c.label,
                pct(c.tpr),
                pct(c.fpr),
                dec(c.recall),
                dec(c.precision),
                dec(c.f1)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    // [truth positive][predicted positive]
    cells: [[u64; 2]; 2],
    disagree: u64,
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        for i in 0..2 {
            for j in 0..2 {
                self.cells[i][j] += o.cells[i][j];
            }
        }
        self.disagree += o.disagree;
        self
    }
}

/// Runs the prime classifier and the tree over every row.
pub fn evaluate<T: Scalar>(tree: &TreeModel<T>, rules: &VerifiedRules<T>, data: &Dataset<T>) -> Result<MetricsReport> {
    if data.is_empty() {
        return Err(Error::Data("dataset has no rows".into()));
    }
    for f in rules.space().features().iter().map(|a| &a.name).chain(tree.features()) {
        if !data.index.contains_key(f) {
            return Err(Error::SpaceMismatch(format!("dataset lacks feature `{f}`")));
        }
    }
    let target = rules.target();
    let tally = (0..data.len())
        .into_par_iter()
        .map(|i| -> Result<Tally> {
            let row = data.row(i);
            let point = discretize_instance(&row, rules.space())?;
            let predicted = rules.decide(&point) == Side::Positive;
            let tree_positive = tree.predict(&row)? == target;
            let mut t = Tally::default();
            if predicted != tree_positive {
                t.disagree = 1;
            }
            if let Some(labels) = data.labels() {
                t.cells[(labels[i] == target) as usize][predicted as usize] = 1;
            }
            Ok(t)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.add(b)))?;
    let rows = data.len() as u64;
    let classes = if data.labels().is_some() {
        let [[tn, fp], [fn_, tp]] = tally.cells;
        vec![
            ClassMetrics::from_counts(target, tp, fp, tn, fn_),
            ClassMetrics::from_counts(rules.negative().label.clone(), tn, fn_, tp, fp),
        ]
    } else {
        Vec::new()
    };
    Ok(MetricsReport {
        target: target.to_string(),
        rows,
        agreement: (rows - tally.disagree) as f64 / rows as f64,
        disagreements: tally.disagree,
        classes,
    })
}
