//! Clip plans: one cut job per subtitle cue.
//!
//! The plan is data only. Optional FFmpeg-compatible argument vectors are
//! emitted for convenience, but nothing here runs an external process.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CorpusError, SrtEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AudioMode {
    /// Keep only the front-centre (dialogue) channel.
    #[default]
    CenterChannel,
    Downmix,
}

impl fmt::Display for AudioMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AudioMode::CenterChannel => "center-channel",
            AudioMode::Downmix => "downmix",
        })
    }
}

impl FromStr for AudioMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "center-channel" => Ok(AudioMode::CenterChannel),
            "downmix" => Ok(AudioMode::Downmix),
            other => Err(format!(
                "expected `center-channel` or `downmix`, got `{other}`"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipJob {
    pub movie_id: String,
    pub index: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub audio_mode: AudioMode,
    pub out_audio: PathBuf,
    pub out_video: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipPlan {
    pub movie: PathBuf,
    pub sample_rate: u32,
    pub jobs: Vec<ClipJob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commands: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub movie_id: String,
    pub out_dir: PathBuf,
    pub audio_mode: AudioMode,
    pub sample_rate: u32,
    pub emit_commands: bool,
}

/// Movie id from the file stem, e.g. `/films/Frozen.mkv` → `Frozen`.
pub fn movie_id_from_path(movie: &Path) -> String {
    movie
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "movie".into())
}

/// Output file stem `{movie_id}_{index:05}`.
pub fn clip_stem(movie_id: &str, index: u32) -> String {
    format!("{movie_id}_{index:05}")
}

pub fn build_clip_plan(
    entries: &[SrtEntry],
    movie: &Path,
    opts: &PlanOptions,
) -> Result<ClipPlan, CorpusError> {
    if entries.is_empty() {
        return Err(CorpusError::NoCues);
    }
    let mut seen = HashSet::new();
    if let Some(dup) = entries.iter().find(|e| !seen.insert(e.index)) {
        return Err(CorpusError::DuplicateCueIndex(dup.index));
    }
    let mut sorted: Vec<&SrtEntry> = entries.iter().collect();
    sorted.sort_by_key(|e| e.index);

    let jobs: Vec<ClipJob> = sorted
        .into_iter()
        .map(|e| {
            let stem = clip_stem(&opts.movie_id, e.index);
            ClipJob {
                movie_id: opts.movie_id.clone(),
                index: e.index,
                start_s: e.start_ms as f64 / 1000.0,
                end_s: e.end_ms as f64 / 1000.0,
                audio_mode: opts.audio_mode,
                out_audio: opts.out_dir.join(format!("{stem}.wav")),
                out_video: opts.out_dir.join(format!("{stem}.mp4")),
            }
        })
        .collect();
    let commands = opts.emit_commands.then(|| {
        jobs.iter()
            .flat_map(|j| media_commands(j, movie, opts.sample_rate))
            .collect()
    });
    Ok(ClipPlan {
        movie: movie.to_path_buf(),
        sample_rate: opts.sample_rate,
        jobs,
        commands,
    })
}

/// Audio and video extraction argv for one job (input seeking, explicit duration).
pub fn media_commands(job: &ClipJob, movie: &Path, sample_rate: u32) -> [Vec<String>; 2] {
    let start = format!("{:.3}", job.start_s);
    let duration = format!("{:.3}", job.end_s - job.start_s);
    let movie = movie.to_string_lossy().into_owned();
    let head = |v: &mut Vec<String>| {
        v.extend(
            [
                "ffmpeg", "-nostdin", "-y", "-ss", &start, "-i", &movie, "-t", &duration,
            ]
            .map(String::from),
        );
    };

    let mut audio = Vec::new();
    head(&mut audio);
    audio.push("-vn".into());
    match job.audio_mode {
        AudioMode::CenterChannel => audio.extend(["-af", "pan=mono|c0=FC"].map(String::from)),
        AudioMode::Downmix => audio.extend(["-ac", "1"].map(String::from)),
    }
    audio.extend([
        "-ar".into(),
        sample_rate.to_string(),
        "-c:a".into(),
        "pcm_s16le".into(),
    ]);
    audio.push(job.out_audio.to_string_lossy().into_owned());

    let mut video = Vec::new();
    head(&mut video);
    video.extend(["-c:v", "libx264", "-c:a", "aac"].map(String::from));
    video.push(job.out_video.to_string_lossy().into_owned());
    [audio, video]
}
