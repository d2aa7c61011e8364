use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use super::{ClipRecord, CorpusError, Emotion};
use crate::dsp::{pitch_stats, PitchTrack};

/// Descriptive statistics over a manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_movies: usize,
    pub n_clips: usize,
    pub n_speakers: usize,
    /// Mean whitespace-token count per subtitle.
    pub avg_subtitle_words: f64,
    pub avg_duration_s: f64,
    pub emotion_counts: BTreeMap<Emotion, usize>,
    /// Words ranked by count (descending), ties broken lexicographically.
    pub word_counts: Vec<(String, usize)>,
    /// Token count → number of clips.
    pub utterance_length_histogram: BTreeMap<usize, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pitch_mean_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pitch_variance: Option<f64>,
}

/// Lowercases, drops ASCII punctuation and splits on whitespace.
pub fn tokenize_words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|tok| {
        let w: String = tok
            .chars()
            .filter(|c| !c.is_ascii_punctuation())
            .flat_map(char::to_lowercase)
            .collect();
        (!w.is_empty()).then_some(w)
    })
}

/// Order-independent accumulator; `merge` is associative and commutative.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    movies: BTreeSet<String>,
    speakers: BTreeSet<String>,
    n_clips: usize,
    total_tokens: usize,
    total_duration_ms: u128,
    emotions: BTreeMap<Emotion, usize>,
    words: HashMap<String, usize>,
    lengths: BTreeMap<usize, usize>,
}

impl StatsAccumulator {
    pub fn add(&mut self, r: &ClipRecord) {
        if !self.movies.contains(&r.movie_id) {
            self.movies.insert(r.movie_id.clone());
        }
        if !self.speakers.contains(&r.speaker) {
            self.speakers.insert(r.speaker.clone());
        }
        self.n_clips += 1;
        let tokens = r.text.split_whitespace().count();
        self.total_tokens += tokens;
        self.total_duration_ms += r.duration_ms() as u128;
        *self.emotions.entry(r.emotion).or_default() += 1;
        *self.lengths.entry(tokens).or_default() += 1;
        for w in tokenize_words(&r.text) {
            *self.words.entry(w).or_default() += 1;
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.movies.extend(other.movies);
        self.speakers.extend(other.speakers);
        self.n_clips += other.n_clips;
        self.total_tokens += other.total_tokens;
        self.total_duration_ms += other.total_duration_ms;
        for (k, v) in other.emotions {
            *self.emotions.entry(k).or_default() += v;
        }
        for (k, v) in other.lengths {
            *self.lengths.entry(k).or_default() += v;
        }
        for (k, v) in other.words {
            *self.words.entry(k).or_default() += v;
        }
        self
    }

    pub fn finish(self) -> Result<CorpusStats, CorpusError> {
        if self.n_clips == 0 {
            return Err(CorpusError::EmptyRecords);
        }
        let n = self.n_clips as f64;
        let mut emotion_counts: BTreeMap<Emotion, usize> =
            Emotion::ALL.into_iter().map(|e| (e, 0)).collect();
        emotion_counts.extend(self.emotions);
        let mut word_counts: Vec<(String, usize)> = self.words.into_iter().collect();
        word_counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(CorpusStats {
            n_movies: self.movies.len(),
            n_clips: self.n_clips,
            n_speakers: self.speakers.len(),
            avg_subtitle_words: self.total_tokens as f64 / n,
            avg_duration_s: self.total_duration_ms as f64 / 1000.0 / n,
            emotion_counts,
            word_counts,
            utterance_length_histogram: self.lengths,
            pitch_mean_hz: None,
            pitch_variance: None,
        })
    }
}

/// Corpus statistics, optionally with pitch mean/variance over the given tracks.
pub fn corpus_stats(
    records: &[ClipRecord],
    pitch: Option<&[PitchTrack]>,
    include_unvoiced: bool,
) -> Result<CorpusStats, CorpusError> {
    let acc = records
        .par_iter()
        .fold(StatsAccumulator::default, |mut acc, r| {
            acc.add(r);
            acc
        })
        .reduce(StatsAccumulator::default, StatsAccumulator::merge);
    let mut stats = acc.finish()?;
    if let Some(tracks) = pitch {
        let p = pitch_stats(tracks, include_unvoiced)?;
        stats.pitch_mean_hz = Some(p.mean);
        stats.pitch_variance = Some(p.variance);
    }
    Ok(stats)
}
