use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::DspError;
use crate::audio::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    #[default]
    Hann,
}

impl WindowKind {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameParams {
    pub fft_size: usize,
    pub hop: usize,
    pub win_length: usize,
    pub window: WindowKind,
}

impl Default for FrameParams {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            hop: 256,
            win_length: 1024,
            window: WindowKind::Hann,
        }
    }
}

impl FrameParams {
    pub fn validate(&self) -> Result<(), DspError> {
        if self.hop == 0 || self.hop > self.win_length || self.win_length > self.fft_size {
            return Err(DspError::InvalidFrameParams(format!(
                "need 0 < hop ({}) <= win_length ({}) <= fft_size ({})",
                self.hop, self.win_length, self.fft_size
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frame count for `len` samples with centred (reflect-padded) framing.
    pub fn n_frames(&self, len: usize) -> usize {
        let pad = 2 * (self.win_length / 2);
        1 + (len + pad - self.win_length) / self.hop
    }
}

/// Magnitude STFT, `frames[t][bin]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrogram {
    frames: Vec<Vec<f64>>,
    params: FrameParams,
    sample_rate: u32,
}

impl Spectrogram {
    /// Wraps an externally computed magnitude matrix.
    pub fn from_magnitudes(
        frames: Vec<Vec<f64>>,
        params: FrameParams,
        sample_rate: u32,
    ) -> Result<Self, DspError> {
        params.validate()?;
        let bins = params.n_bins();
        for (t, row) in frames.iter().enumerate() {
            if row.len() != bins {
                return Err(DspError::InvalidMatrix(format!(
                    "frame {t} has {} bins, expected {bins}",
                    row.len()
                )));
            }
            if row.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return Err(DspError::InvalidMatrix(format!(
                    "frame {t} has a negative or non-finite magnitude"
                )));
            }
        }
        Ok(Self {
            frames,
            params,
            sample_rate,
        })
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn params(&self) -> &FrameParams {
        &self.params
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.params.hop as f64
    }

    /// Centre frequency of FFT bin `k` in Hz.
    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.params.fft_size as f64
    }
}

pub(super) struct StftPlan {
    params: FrameParams,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl StftPlan {
    pub(super) fn new(params: &FrameParams) -> Result<Self, DspError> {
        params.validate()?;
        Ok(Self {
            params: params.clone(),
            window: params.window.coefficients(params.win_length),
            fft: FftPlanner::new().plan_fft_forward(params.fft_size),
        })
    }

    pub(super) fn run(&self, w: &Waveform) -> Result<Spectrogram, DspError> {
        if w.channels() != 1 {
            return Err(DspError::NotMono(w.channels()));
        }
        let x = w.samples();
        if x.is_empty() {
            return Err(DspError::EmptyWaveform);
        }
        let p = &self.params;
        let pad = p.win_length / 2;
        let n_frames = p.n_frames(x.len());
        let offset = (p.fft_size - p.win_length) / 2;
        let bins = p.n_bins();
        let mut buf = vec![Complex::new(0.0, 0.0); p.fft_size];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut frames = Vec::with_capacity(n_frames);
        for t in 0..n_frames {
            buf.fill(Complex::new(0.0, 0.0));
            let start = (t * p.hop) as i64 - pad as i64;
            for (i, &win) in self.window.iter().enumerate() {
                let s = x[reflect_index(start + i as i64, x.len())];
                buf[offset + i] = Complex::new(s * win, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            frames.push(buf[..bins].iter().map(|c| c.norm()).collect());
        }
        Ok(Spectrogram {
            frames,
            params: p.clone(),
            sample_rate: w.sample_rate(),
        })
    }
}

/// Maps an out-of-range index back into `0..len` by mirror reflection about the
/// end samples (the edge sample itself is not repeated).
fn reflect_index(i: i64, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as i64 - 1);
    let m = i.rem_euclid(period);
    if m < len as i64 {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Magnitude STFT with centred frames and reflect padding of `win_length / 2`.
pub fn stft_magnitude(w: &Waveform, params: &FrameParams) -> Result<Spectrogram, DspError> {
    StftPlan::new(params)?.run(w)
}

/// Per-frame L2 norm of the STFT magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrack {
    pub values: Vec<f64>,
}

pub fn energy_track(s: &Spectrogram) -> EnergyTrack {
    EnergyTrack {
        values: s
            .frames
            .iter()
            .map(|row| row.iter().map(|m| m * m).sum::<f64>().sqrt())
            .collect(),
    }
}
