//! Waveform ingestion and preprocessing.
//!
//! Everything downstream (features, metrics, pitch statistics) consumes a mono
//! [`Waveform`] at a single canonical rate. This module covers the steps that get
//! audio into that shape: WAV decoding, channel selection, band-limited
//! resampling and zero-padding.

use std::f64::consts::PI;
use std::fmt;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sample rate every pipeline resamples to on ingest unless overridden.
pub const CANONICAL_RATE: u32 = 22_050;

/// Index of the front-centre channel in the standard WAVE multichannel layout
/// (FL, FR, FC, LFE, BL, BR, ...).
pub const CENTER_CHANNEL_INDEX: usize = 2;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("audio file not found: {0}")]
    NotFound(PathBuf),
    #[error("unsupported audio encoding in {path}: {detail}")]
    Unsupported { path: PathBuf, detail: String },
    #[error("truncated audio payload in {0}")]
    Truncated(PathBuf),
    #[error("malformed WAVE file {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("center-channel extraction needs at least 3 channels, got {0}")]
    NoCenterChannel(u16),
    #[error("channel {index} out of range for {channels}-channel audio")]
    ChannelOutOfRange { index: usize, channels: u16 },
    #[error("operation requires mono audio, got {0} channels")]
    NotMono(u16),
    #[error("target sample rate must be positive")]
    ZeroRate,
    #[error("cannot pad {len} samples down to {target}")]
    PadTooShort { len: usize, target: usize },
}

/// Time-domain audio. Multichannel samples are interleaved frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
    channels: u16,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32, channels: u16) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidWaveform(
                "sample rate must be positive".into(),
            ));
        }
        if channels == 0 {
            return Err(AudioError::InvalidWaveform(
                "channel count must be positive".into(),
            ));
        }
        if !samples.len().is_multiple_of(channels as usize) {
            return Err(AudioError::InvalidWaveform(format!(
                "{} samples is not a whole number of {}-channel frames",
                samples.len(),
                channels
            )));
        }
        if let Some(pos) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidWaveform(format!(
                "non-finite sample at {pos}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            channels,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(samples, sample_rate, 1)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    /// Number of frames (samples per channel).
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            ..self.clone()
        }
    }

    fn require_mono(&self) -> Result<(), AudioError> {
        if self.channels == 1 {
            Ok(())
        } else {
            Err(AudioError::NotMono(self.channels))
        }
    }
}

/// How multichannel audio is reduced to one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    /// Front-centre channel (index 2) of 3+ channel audio.
    CenterChannel,
    Average,
    Channel(usize),
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelMode::CenterChannel => f.write_str("center-channel"),
            ChannelMode::Average => f.write_str("average"),
            ChannelMode::Channel(i) => write!(f, "{i}"),
        }
    }
}

impl FromStr for ChannelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "center-channel" | "center" => Ok(ChannelMode::CenterChannel),
            "average" | "downmix" => Ok(ChannelMode::Average),
            other => other
                .parse::<usize>()
                .map(ChannelMode::Channel)
                .map_err(|_| {
                    format!(
                        "expected `center-channel`, `average` or a channel index, got `{other}`"
                    )
                }),
        }
    }
}

/// Decodes a RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit).
///
/// Integer PCM is normalized by 1/32768 so full-scale negative maps to -1.0.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform, AudioError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| match source.kind() {
        ErrorKind::NotFound => AudioError::NotFound(path.to_path_buf()),
        _ => AudioError::Io {
            path: path.to_path_buf(),
            source,
        },
    })?;
    let reader =
        hound::WavReader::new(std::io::Cursor::new(bytes)).map_err(|e| map_hound_error(path, e))?;
    let spec = reader.spec();
    let expected = reader.len() as usize;
    // The payload is in memory, so any read failure past the header means the
    // data chunk is shorter than declared.
    let truncated = |_| AudioError::Truncated(path.to_path_buf());
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(truncated)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(truncated)?,
        (format, bits) => {
            return Err(AudioError::Unsupported {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?} samples"),
            })
        }
    };
    if samples.len() < expected || !samples.len().is_multiple_of(spec.channels as usize) {
        return Err(AudioError::Truncated(path.to_path_buf()));
    }
    Waveform::new(samples, spec.sample_rate, spec.channels).map_err(|e| AudioError::Malformed {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn map_hound_error(path: &Path, err: hound::Error) -> AudioError {
    let path = path.to_path_buf();
    match err {
        hound::Error::IoError(_) => AudioError::Truncated(path),
        hound::Error::Unsupported => AudioError::Unsupported {
            path,
            detail: "unsupported WAVE encoding".into(),
        },
        hound::Error::FormatError(detail) => AudioError::Malformed {
            path,
            detail: detail.into(),
        },
        other => AudioError::Malformed {
            path,
            detail: other.to_string(),
        },
    }
}

/// Writes mono PCM16. Samples are clamped to the representable range.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<(), AudioError> {
    let path = path.as_ref();
    w.require_mono()?;
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let io_err = |e: hound::Error| match e {
        hound::Error::IoError(source) => AudioError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => AudioError::Malformed {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(io_err)?;
    for &s in &w.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(io_err)?;
    }
    writer.finalize().map_err(io_err)
}

/// Reduces `w` to a single channel.
pub fn to_mono(w: &Waveform, mode: ChannelMode) -> Result<Waveform, AudioError> {
    let channels = w.channels as usize;
    let pick = |index: usize| -> Vec<f64> {
        w.samples
            .chunks_exact(channels)
            .map(|frame| frame[index])
            .collect()
    };
    let samples = match mode {
        ChannelMode::Channel(index) if index >= channels => {
            return Err(AudioError::ChannelOutOfRange {
                index,
                channels: w.channels,
            })
        }
        _ if channels == 1 => return Ok(w.clone()),
        ChannelMode::CenterChannel if channels < 3 => {
            return Err(AudioError::NoCenterChannel(w.channels))
        }
        ChannelMode::CenterChannel => pick(CENTER_CHANNEL_INDEX),
        ChannelMode::Channel(index) => pick(index),
        ChannelMode::Average => w
            .samples
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect(),
    };
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
        channels: 1,
    })
}

/// Zero crossings of the sinc kernel kept on each side of the centre tap.
const SINC_ZERO_CROSSINGS: usize = 32;
/// Kaiser window shape parameter; gives roughly 85 dB of stopband attenuation.
const KAISER_BETA: f64 = 8.6;
/// Largest interpolation factor for which per-phase tap tables are precomputed.
const MAX_TABLE_PHASES: u64 = 4096;

/// Band-limited polyphase resampling with a Kaiser-windowed sinc kernel.
///
/// Output length is `round(len * target / source)`. Resampling to the source
/// rate returns the input unchanged.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform, AudioError> {
    w.require_mono()?;
    if target_rate == 0 {
        return Err(AudioError::ZeroRate);
    }
    if target_rate == w.sample_rate {
        return Ok(w.clone());
    }
    let g = gcd(w.sample_rate as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = w.sample_rate as u64 / g;
    let input = &w.samples;
    let out_len = ((input.len() as u128 * up as u128 + down as u128 / 2) / down as u128) as usize;

    // Cutoff relative to the input Nyquist; below 1 when decimating.
    let cutoff = (up as f64 / down as f64).min(1.0);
    let half_taps = (SINC_ZERO_CROSSINGS as f64 / cutoff).ceil() as i64;
    let kernel = |t: f64| -> f64 {
        let x = t / half_taps as f64;
        if x.abs() >= 1.0 {
            return 0.0;
        }
        cutoff * sinc(cutoff * t) * bessel_i0(KAISER_BETA * (1.0 - x * x).sqrt())
            / bessel_i0(KAISER_BETA)
    };
    // Taps for output phase p cover input offsets -half_taps+1 ..= half_taps
    // around floor(n * down / up).
    let taps_for_phase = |phase: u64| -> Vec<f64> {
        let frac = phase as f64 / up as f64;
        (-half_taps + 1..=half_taps)
            .map(|k| kernel(frac - k as f64))
            .collect()
    };
    let table: Option<Vec<Vec<f64>>> =
        (up <= MAX_TABLE_PHASES).then(|| (0..up).map(taps_for_phase).collect());

    let len = input.len() as i64;
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len as u64 {
        let pos = n * down;
        let base = (pos / up) as i64;
        let phase = pos % up;
        let computed;
        let taps: &[f64] = match &table {
            Some(t) => &t[phase as usize],
            None => {
                computed = taps_for_phase(phase);
                &computed
            }
        };
        let mut acc = 0.0;
        for (k, &h) in (-half_taps + 1..=half_taps).zip(taps) {
            let idx = base + k;
            if (0..len).contains(&idx) {
                acc += input[idx as usize] * h;
            }
        }
        out.push(acc);
    }
    Ok(Waveform {
        samples: out,
        sample_rate: target_rate,
        channels: 1,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Appends zeros so the waveform holds `target_len` frames.
pub fn pad_to_length(w: &Waveform, target_len: usize) -> Result<Waveform, AudioError> {
    let len = w.len();
    if target_len < len {
        return Err(AudioError::PadTooShort {
            len,
            target: target_len,
        });
    }
    let mut samples = w.samples.clone();
    samples.resize(target_len * w.channels as usize, 0.0);
    Ok(Waveform { samples, ..*w })
}

/// Reads a file and brings it to mono at `rate`.
pub fn load_mono(
    path: impl AsRef<Path>,
    mode: ChannelMode,
    rate: u32,
) -> Result<Waveform, AudioError> {
    let raw = read_wav(path)?;
    let mono = to_mono(&raw, mode)?;
    resample(&mono, rate)
}
