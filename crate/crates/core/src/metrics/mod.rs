//! Mel cepstral distortion and its alignment-based variants.
//!
//! For MFCC sequences `C` (M frames) and `C'` (N frames) with per-frame
//! Euclidean distance `d`:
//!
//! - **MCD**: `(1/T) Σ_t d(c_t, c'_t)`, requiring `M = N = T`.
//! - **MCD-DTW**: `γ(M,N) / R`, where `γ` is the minimum cumulative distance of a
//!   monotone alignment and `R` the number of cells on that path.
//! - **MCD-DTW-SL**: `η · γ(M,N) / R` with `η = max(M,N) / min(M,N)`, which
//!   penalizes duration mismatch that plain DTW hides.

mod dtw;
mod report;

pub use dtw::{dtw_align, dtw_align_frames, AlignmentResult};
pub use report::{
    evaluate_corpus, evaluate_pair, load_pair_manifest, parse_pair_manifest, Aggregate,
    CorpusReport, LengthPolicy, MetricConfig, PairEntry, PairEvaluator, PairFailure, PairMetrics,
    PairRow,
};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;
use crate::dsp::{DspError, MfccSequence};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("vector dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("frame count mismatch: {m} vs {n} (pad upstream or use zero-pad mode)")]
    LengthMismatch { m: usize, n: usize },
    #[error("empty MFCC sequence")]
    EmptySequence,
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("{side} audio: {source}")]
    Side {
        side: &'static str,
        #[source]
        source: Box<MetricsError>,
    },
    #[error("pair manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Output scale of the MCD family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McdScale {
    /// Plain average Euclidean distance, no constant.
    #[default]
    Paper,
    /// Multiplied by `10 √2 / ln 10`, the dB-style constant used by most MCD tools.
    Conventional,
}

impl McdScale {
    pub fn factor(self) -> f64 {
        match self {
            McdScale::Paper => 1.0,
            McdScale::Conventional => 10.0 * std::f64::consts::SQRT_2 / std::f64::consts::LN_10,
        }
    }
}

impl fmt::Display for McdScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            McdScale::Paper => "paper",
            McdScale::Conventional => "conventional",
        })
    }
}

impl FromStr for McdScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(McdScale::Paper),
            "conventional" => Ok(McdScale::Conventional),
            other => Err(format!("expected `paper` or `conventional`, got `{other}`")),
        }
    }
}

/// Euclidean distance between two coefficient vectors.
pub fn frame_distance(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(euclidean(a, b))
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Frame-synchronous MCD. Both sequences must have the same frame count.
pub fn mcd(a: &MfccSequence, b: &MfccSequence, scale: McdScale) -> Result<f64, MetricsError> {
    if a.k() != b.k() {
        return Err(MetricsError::DimensionMismatch {
            left: a.k(),
            right: b.k(),
        });
    }
    if a.n_frames() != b.n_frames() {
        return Err(MetricsError::LengthMismatch {
            m: a.n_frames(),
            n: b.n_frames(),
        });
    }
    if a.n_frames() == 0 {
        return Err(MetricsError::EmptySequence);
    }
    let total: f64 = a
        .frames()
        .iter()
        .zip(b.frames())
        .map(|(x, y)| euclidean(x, y))
        .sum();
    Ok(scale.factor() * total / a.n_frames() as f64)
}

/// `γ(M,N) / R`.
pub fn mcd_dtw(a: &AlignmentResult) -> f64 {
    a.cost / a.path_len() as f64
}

/// Length-weighted score and its coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeechLengthScore {
    pub score: f64,
    pub eta: f64,
}

/// `η · γ(M,N) / R` with `η = max(M,N) / min(M,N)`.
pub fn mcd_dtw_sl(a: &AlignmentResult) -> Result<SpeechLengthScore, MetricsError> {
    let eta = length_ratio(a.m, a.n)?;
    Ok(SpeechLengthScore {
        score: eta * mcd_dtw(a),
        eta,
    })
}

/// `max(m, n) / min(m, n)`.
pub fn length_ratio(m: usize, n: usize) -> Result<f64, MetricsError> {
    if m.min(n) == 0 {
        return Err(MetricsError::EmptySequence);
    }
    Ok(m.max(n) as f64 / m.min(n) as f64)
}
