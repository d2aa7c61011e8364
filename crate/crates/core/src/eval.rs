//! Identity/emotion accuracy and MOS aggregation.
//!
//! Accuracy follows the centroid protocol: embeddings from an external encoder
//! are L2-normalized, each label's centroid is the mean of its members, and a
//! query is assigned to the label whose centroid has the highest cosine
//! similarity. Emotion accuracy is the same computation with emotion labels.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Centroids with a norm below this are treated as degenerate.
const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("line {line}: vector has dimension {found}, expected {expected}")]
    RaggedDimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: zero vector cannot be normalized")]
    ZeroVector { line: usize },
    #[error("duplicate record ({label}, {id})")]
    DuplicateRecord { label: String, id: String },
    #[error("embedding set is empty")]
    EmptySet,
    #[error("dimension mismatch: query {query}, model {model}")]
    DimensionMismatch { query: usize, model: usize },
    #[error("every centroid is degenerate")]
    AllDegenerate,
    #[error("query vector has zero norm")]
    ZeroQuery,
    #[error("no ratings supplied")]
    NoRatings,
    #[error("rating {0} is outside 1..5 or not on the 0.5 grid")]
    InvalidRating(f64),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Which annotation field provides the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKey {
    #[default]
    Speaker,
    Emotion,
}

impl LabelKey {
    pub fn field(self) -> &'static str {
        match self {
            LabelKey::Speaker => "speaker",
            LabelKey::Emotion => "emotion",
        }
    }
}

impl fmt::Display for LabelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.field())
    }
}

impl FromStr for LabelKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "speaker" => Ok(LabelKey::Speaker),
            "emotion" => Ok(LabelKey::Emotion),
            other => Err(format!("expected `speaker` or `emotion`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingRecord {
    pub label: String,
    pub id: String,
    /// Unit-norm embedding.
    pub vector: Vec<f64>,
}

/// Labeled unit vectors sharing one dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingSet {
    records: Vec<EmbeddingRecord>,
    dim: Option<usize>,
    keys: HashSet<(String, String)>,
}

impl EmbeddingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates and L2-normalizes `vector` before storing it. `line` is only
    /// used for error reporting.
    pub fn insert(
        &mut self,
        label: impl Into<String>,
        id: impl Into<String>,
        vector: Vec<f64>,
        line: usize,
    ) -> Result<(), EvalError> {
        let (label, id) = (label.into(), id.into());
        if vector.is_empty() || vector.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::MalformedRow {
                line,
                message: "vector must be a non-empty array of finite numbers".into(),
            });
        }
        if let Some(expected) = self.dim {
            if vector.len() != expected {
                return Err(EvalError::RaggedDimension {
                    line,
                    expected,
                    found: vector.len(),
                });
            }
        }
        let norm = l2_norm(&vector);
        if norm == 0.0 {
            return Err(EvalError::ZeroVector { line });
        }
        if !self.keys.insert((label.clone(), id.clone())) {
            return Err(EvalError::DuplicateRecord { label, id });
        }
        self.dim = Some(vector.len());
        self.records.push(EmbeddingRecord {
            label,
            id,
            vector: vector.iter().map(|v| v / norm).collect(),
        });
        Ok(())
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    /// `None` until the first record is inserted.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Parses JSON Lines rows `{"id", "vector", "label" | "speaker" | "emotion"}`.
    ///
    /// The label comes from the field named by `key`, falling back to `label`.
    pub fn parse_jsonl(text: &str, key: LabelKey) -> Result<Self, EvalError> {
        let mut set = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| EvalError::MalformedRow { line, message };
            let row: Value = serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
            let text_field = |name: &str| -> Option<String> {
                match row.get(name)? {
                    Value::String(s) => Some(s.clone()),
                    Value::Number(n) => Some(n.to_string()),
                    _ => None,
                }
            };
            let label = text_field(key.field())
                .or_else(|| text_field("label"))
                .ok_or_else(|| malformed(format!("missing `{}` or `label` field", key.field())))?;
            let id = text_field("id").ok_or_else(|| malformed("missing `id` field".into()))?;
            let vector: Vec<f64> = row
                .get("vector")
                .cloned()
                .ok_or_else(|| malformed("missing `vector` field".into()))
                .and_then(|v| {
                    serde_json::from_value(v).map_err(|e| malformed(format!("vector: {e}")))
                })?;
            set.insert(label, id, vector, line)?;
        }
        Ok(set)
    }
}

pub fn load_embeddings(path: &Path, key: LabelKey) -> Result<EmbeddingSet, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    EmbeddingSet::parse_jsonl(&text, key)
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-label mean of normalized member embeddings (not renormalized).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentroidModel {
    pub centroids: BTreeMap<String, Vec<f64>>,
    pub counts: BTreeMap<String, usize>,
    pub dim: usize,
}

impl CentroidModel {
    pub fn is_degenerate(&self, label: &str) -> bool {
        self.centroids
            .get(label)
            .is_some_and(|c| l2_norm(c) < DEGENERATE_NORM)
    }

    pub fn degenerate_labels(&self) -> Vec<&str> {
        self.centroids
            .keys()
            .filter(|l| self.is_degenerate(l))
            .map(String::as_str)
            .collect()
    }
}

pub fn build_centroids(set: &EmbeddingSet) -> Result<CentroidModel, EvalError> {
    let dim = set.dim().ok_or(EvalError::EmptySet)?;
    let mut sums: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in set.records() {
        let sum = sums
            .entry(r.label.clone())
            .or_insert_with(|| vec![0.0; dim]);
        for (s, v) in sum.iter_mut().zip(&r.vector) {
            *s += v;
        }
        *counts.entry(r.label.clone()).or_default() += 1;
    }
    let centroids = sums
        .into_iter()
        .map(|(label, sum)| {
            let h = counts[&label] as f64;
            (label, sum.into_iter().map(|s| s / h).collect())
        })
        .collect();
    Ok(CentroidModel {
        centroids,
        counts,
        dim,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub label: String,
    pub similarity: f64,
}

/// Highest-cosine centroid; ties go to the lexicographically first label.
/// Degenerate (zero) centroids are skipped.
pub fn classify(v: &[f64], model: &CentroidModel) -> Result<Classification, EvalError> {
    if v.len() != model.dim {
        return Err(EvalError::DimensionMismatch {
            query: v.len(),
            model: model.dim,
        });
    }
    let qn = l2_norm(v);
    if qn == 0.0 {
        return Err(EvalError::ZeroQuery);
    }
    let mut best: Option<Classification> = None;
    for (label, c) in &model.centroids {
        let cn = l2_norm(c);
        if cn < DEGENERATE_NORM {
            continue;
        }
        let similarity = dot(v, c) / (qn * cn);
        if best.as_ref().is_none_or(|b| similarity > b.similarity) {
            best = Some(Classification {
                label: label.clone(),
                similarity,
            });
        }
    }
    best.ok_or(EvalError::AllDegenerate)
}

/// Percentage of test records whose predicted label equals their own.
pub fn accuracy(test: &EmbeddingSet, model: &CentroidModel) -> Result<f64, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let mut correct = 0usize;
    for r in test.records() {
        if classify(&r.vector, model)?.label == r.label {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / test.len() as f64)
}

/// Output of the `accuracy` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub label_key: LabelKey,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy_percent: f64,
}

pub fn accuracy_report(
    train: &EmbeddingSet,
    test: &EmbeddingSet,
    label_key: LabelKey,
) -> Result<AccuracyReport, EvalError> {
    let model = build_centroids(train)?;
    Ok(AccuracyReport {
        label_key,
        n_train: train.len(),
        n_test: test.len(),
        accuracy_percent: accuracy(test, &model)?,
    })
}

/// Mean opinion score with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MosSummary {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
    /// Sample standard deviation (n - 1 denominator; 0 for a single rating).
    pub std: f64,
}

impl fmt::Display for MosSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.half_width)
    }
}

/// Validates a rating on the 1..5 scale with 0.5-point steps.
pub fn check_rating(r: f64) -> Result<(), EvalError> {
    let doubled = r * 2.0;
    if !(1.0..=5.0).contains(&r) || (doubled - doubled.round()).abs() > 1e-9 {
        return Err(EvalError::InvalidRating(r));
    }
    Ok(())
}

pub fn mos_aggregate(ratings: &[f64]) -> Result<MosSummary, EvalError> {
    if ratings.is_empty() {
        return Err(EvalError::NoRatings);
    }
    for &r in ratings {
        check_rating(r)?;
    }
    let n = ratings.len();
    let mean = ratings.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (ratings.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(MosSummary {
        mean,
        half_width: 1.96 * std / (n as f64).sqrt(),
        n,
        std,
    })
}

/// One rating from a JSONL ratings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    #[serde(default)]
    pub rater: Option<String>,
    #[serde(default)]
    pub item: Option<String>,
    pub score: f64,
}

/// Reads ratings from single-column CSV (optional non-numeric header) or from
/// JSON Lines `{rater, item, score}`; the format is detected from the first
/// non-blank line.
pub fn parse_ratings(text: &str) -> Result<Vec<f64>, EvalError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().trim_start_matches('\u{feff}')))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let jsonl = lines.peek().is_some_and(|(_, l)| l.starts_with('{'));
    let mut out = Vec::new();
    let mut first = true;
    for (line, l) in lines {
        if jsonl {
            let row: RatingRow = serde_json::from_str(l).map_err(|e| EvalError::MalformedRow {
                line,
                message: e.to_string(),
            })?;
            out.push(row.score);
        } else {
            let cell = l.split(',').next().unwrap_or("").trim().trim_matches('"');
            match cell.parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) if first => {}
                Err(_) => {
                    return Err(EvalError::MalformedRow {
                        line,
                        message: format!("`{cell}` is not a number"),
                    })
                }
            }
        }
        first = false;
    }
    Ok(out)
}
