//! Corpus construction: subtitles, clip plans, manifests, splits and statistics.

mod plan;
mod split;
mod srt;
mod stats;

pub use plan::{
    build_clip_plan, clip_stem, media_commands, movie_id_from_path, AudioMode, ClipJob, ClipPlan,
    PlanOptions,
};
pub use split::{split_dataset, SplitAssignment, SplitRatios};
pub use srt::{format_timestamp, parse_srt, parse_timestamp, serialize_srt, SrtEntry, SrtError};
pub use stats::{corpus_stats, tokenize_words, CorpusStats, StatsAccumulator};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::DspError;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Srt(#[from] SrtError),
    #[error("no subtitle cues to plan")]
    NoCues,
    #[error("duplicate cue index {0}")]
    DuplicateCueIndex(u32),
    #[error("invalid split ratios: {0}")]
    BadRatios(String),
    #[error("need at least 3 records to split, got {0}")]
    TooFewRecords(usize),
    #[error("duplicate clip id `{0}`")]
    DuplicateId(String),
    #[error("record list is empty")]
    EmptyRecords,
    #[error("manifest row {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("pitch statistics: {0}")]
    Pitch(#[from] DspError),
}

/// The eight emotion classes used for annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Angry,
    Disgust,
    Fear,
    Happy,
    Neutral,
    Sad,
    Surprise,
    Others,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Angry,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Happy,
        Emotion::Neutral,
        Emotion::Sad,
        Emotion::Surprise,
        Emotion::Others,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Angry => "angry",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Happy => "happy",
            Emotion::Neutral => "neutral",
            Emotion::Sad => "sad",
            Emotion::Surprise => "surprise",
            Emotion::Others => "others",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown emotion label `{s}`"))
    }
}

/// One annotated clip, a row of the corpus manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipRecord {
    pub movie_id: String,
    pub clip_index: u32,
    pub speaker: String,
    pub emotion: Emotion,
    pub text: String,
    pub start_ms: u64,
    pub end_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_path: Option<PathBuf>,
}

impl ClipRecord {
    pub fn id(&self) -> String {
        clip_stem(&self.movie_id, self.clip_index)
    }

    pub fn duration_ms(&self) -> u64 {
        self.end_ms.saturating_sub(self.start_ms)
    }
}

/// Parses a JSONL manifest; blank lines are skipped and rows are numbered from 1.
pub fn parse_manifest(text: &str) -> Result<Vec<ClipRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| CorpusError::Manifest {
            line: i + 1,
            message,
        };
        let rec: ClipRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if rec.end_ms <= rec.start_ms {
            return Err(err(format!(
                "end_ms {} is not after start_ms {}",
                rec.end_ms, rec.start_ms
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn manifest_to_jsonl(records: &[ClipRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("clip records always serialize") + "\n")
        .collect()
}

pub fn load_manifest(path: &Path) -> Result<Vec<ClipRecord>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(&text)
}

pub fn save_manifest(records: &[ClipRecord], path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, manifest_to_jsonl(records)).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Builds unannotated records from parsed cues; speaker and emotion are filled in later.
pub fn records_from_cues(movie_id: &str, entries: &[SrtEntry]) -> Vec<ClipRecord> {
    entries
        .iter()
        .map(|e| ClipRecord {
            movie_id: movie_id.to_string(),
            clip_index: e.index,
            speaker: String::new(),
            emotion: Emotion::Others,
            text: e.text.clone(),
            start_ms: e.start_ms,
            end_ms: e.end_ms,
            audio_path: None,
            video_path: None,
        })
        .collect()
}
