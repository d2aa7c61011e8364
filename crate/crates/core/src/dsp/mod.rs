//! Frame-level feature extraction.
//!
//! The pipeline is waveform → magnitude STFT → log mel spectrogram → MFCC, with
//! energy and pitch tracks computed on the same hop so frame indices line up.
//! [`FeatureExtractor`] precomputes the FFT plan, window, filterbank and DCT basis
//! once; the free functions build them per call.

mod mel;
mod mfcc;
mod pitch;
mod stft;

pub use mel::{hz_to_mel, mel_spectrogram, mel_to_hz, MelFilterbank, MelParams, MelSpectrogram};
pub use mfcc::{mfcc, DctBasis, MfccParams, MfccSequence};
pub use pitch::{pitch_stats, pitch_track, PitchParams, PitchStats, PitchTrack};
pub use stft::{energy_track, stft_magnitude, EnergyTrack, FrameParams, Spectrogram, WindowKind};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::Waveform;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("waveform is empty")]
    EmptyWaveform,
    #[error("feature extraction requires mono audio, got {0} channels")]
    NotMono(u16),
    #[error("invalid frame parameters: {0}")]
    InvalidFrameParams(String),
    #[error("invalid mel band edges: fmin {fmin} Hz, fmax {fmax} Hz at {sample_rate} Hz")]
    InvalidBand {
        fmin: f64,
        fmax: f64,
        sample_rate: u32,
    },
    #[error("mel band count must be positive")]
    NoMelBands,
    #[error("coefficient count {k} out of range (1..={max})")]
    CoefficientRange { k: usize, max: usize },
    #[error("invalid pitch band: f_min {f_min} Hz, f_max {f_max} Hz at {sample_rate} Hz")]
    InvalidPitchBand {
        f_min: f64,
        f_max: f64,
        sample_rate: u32,
    },
    #[error("invalid feature matrix: {0}")]
    InvalidMatrix(String),
    #[error("sample rate mismatch: extractor built for {expected} Hz, got {actual} Hz")]
    RateMismatch { expected: u32, actual: u32 },
    #[error("no pitch frames retained for statistics")]
    NoPitchFrames,
}

/// Complete parameter block for the feature pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FeatureConfig {
    pub frame: FrameParams,
    pub mel: MelParams,
    pub mfcc: MfccParams,
    pub pitch: PitchParams,
}

/// All features of one waveform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSet {
    pub sample_rate: u32,
    pub n_frames: usize,
    pub mel: MelSpectrogram,
    pub mfcc: MfccSequence,
    pub pitch: PitchTrack,
    pub energy: EnergyTrack,
}

/// Reusable extractor with precomputed FFT plan, filterbank and DCT basis.
///
/// Immutable once built, so it can be shared across threads.
pub struct FeatureExtractor {
    config: FeatureConfig,
    sample_rate: u32,
    stft: stft::StftPlan,
    filterbank: MelFilterbank,
    basis: DctBasis,
}

impl FeatureExtractor {
    pub fn new(config: FeatureConfig, sample_rate: u32) -> Result<Self, DspError> {
        config.frame.validate()?;
        config.pitch.validate(sample_rate)?;
        let filterbank = MelFilterbank::new(
            sample_rate,
            config.frame.fft_size,
            config.mel.n_mels,
            config.mel.fmin,
            config.mel.fmax,
        )?;
        config.mfcc.validate(config.mel.n_mels)?;
        let basis = DctBasis::new(config.mel.n_mels);
        Ok(Self {
            stft: stft::StftPlan::new(&config.frame)?,
            config,
            sample_rate,
            filterbank,
            basis,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    fn check_rate(&self, w: &Waveform) -> Result<(), DspError> {
        if w.sample_rate() != self.sample_rate {
            return Err(DspError::RateMismatch {
                expected: self.sample_rate,
                actual: w.sample_rate(),
            });
        }
        Ok(())
    }

    pub fn spectrogram(&self, w: &Waveform) -> Result<Spectrogram, DspError> {
        self.check_rate(w)?;
        self.stft.run(w)
    }

    pub fn mel(&self, s: &Spectrogram) -> MelSpectrogram {
        self.filterbank.apply(s, self.config.mel.log_floor)
    }

    pub fn mfcc(&self, w: &Waveform) -> Result<MfccSequence, DspError> {
        let spec = self.spectrogram(w)?;
        let mel = self.mel(&spec);
        mfcc::mfcc_with_basis(&mel, &self.config.mfcc, &self.basis)
    }

    pub fn extract(&self, w: &Waveform) -> Result<FeatureSet, DspError> {
        let spec = self.spectrogram(w)?;
        let mel = self.mel(&spec);
        let mfcc = mfcc::mfcc_with_basis(&mel, &self.config.mfcc, &self.basis)?;
        let energy = energy_track(&spec);
        let pitch = pitch_track(w, &self.config.pitch)?;
        Ok(FeatureSet {
            sample_rate: self.sample_rate,
            n_frames: spec.n_frames(),
            mel,
            mfcc,
            pitch,
            energy,
        })
    }
}
