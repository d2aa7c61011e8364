use serde::{Deserialize, Serialize};

use super::{DspError, Spectrogram};

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelParams {
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    /// Power floor applied before the natural log.
    pub log_floor: f64,
}

impl Default for MelParams {
    fn default() -> Self {
        Self {
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
            log_floor: 1e-10,
        }
    }
}

/// Log mel power, `frames[t][band]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MelSpectrogram {
    frames: Vec<Vec<f64>>,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
    frame_rate: f64,
}

impl MelSpectrogram {
    /// Wraps a precomputed log-mel matrix (every row must have `n_mels` finite entries).
    pub fn from_log_mel(
        frames: Vec<Vec<f64>>,
        fmin: f64,
        fmax: f64,
        frame_rate: f64,
    ) -> Result<Self, DspError> {
        let n_mels = frames.first().map_or(0, Vec::len);
        if n_mels == 0 {
            return Err(DspError::NoMelBands);
        }
        for (t, row) in frames.iter().enumerate() {
            if row.len() != n_mels || row.iter().any(|v| !v.is_finite()) {
                return Err(DspError::InvalidMatrix(format!(
                    "mel frame {t} is ragged or non-finite"
                )));
            }
        }
        Ok(Self {
            frames,
            n_mels,
            fmin,
            fmax,
            frame_rate,
        })
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn fmin(&self) -> f64 {
        self.fmin
    }

    pub fn fmax(&self) -> f64 {
        self.fmax
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }
}

/// Triangular filters on the HTK mel scale, unnormalized (peak weight 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Vec<Vec<f64>>,
    centers_hz: Vec<f64>,
    fmin: f64,
    fmax: f64,
}

impl MelFilterbank {
    pub fn new(
        sample_rate: u32,
        fft_size: usize,
        n_mels: usize,
        fmin: f64,
        fmax: f64,
    ) -> Result<Self, DspError> {
        if n_mels == 0 {
            return Err(DspError::NoMelBands);
        }
        let nyquist = sample_rate as f64 / 2.0;
        if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
            return Err(DspError::InvalidBand {
                fmin,
                fmax,
                sample_rate,
            });
        }
        let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let n_bins = fft_size / 2 + 1;
        let bin_hz = |k: usize| k as f64 * sample_rate as f64 / fft_size as f64;
        let weights = edges
            .windows(3)
            .map(|e| {
                let (left, center, right) = (e[0], e[1], e[2]);
                (0..n_bins)
                    .map(|k| {
                        let f = bin_hz(k);
                        let rising = (f - left) / (center - left);
                        let falling = (right - f) / (right - center);
                        rising.min(falling).max(0.0)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            weights,
            centers_hz: edges[1..=n_mels].to_vec(),
            fmin,
            fmax,
        })
    }

    /// `weights[band][bin]`.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    pub fn n_mels(&self) -> usize {
        self.weights.len()
    }

    /// `log(max(floor, W · |X|²))` per frame.
    pub fn apply(&self, s: &Spectrogram, log_floor: f64) -> MelSpectrogram {
        let frames = s
            .frames()
            .iter()
            .map(|row| {
                self.weights
                    .iter()
                    .map(|w| {
                        let e: f64 = w.iter().zip(row).map(|(w, m)| w * m * m).sum();
                        e.max(log_floor).ln()
                    })
                    .collect()
            })
            .collect();
        MelSpectrogram {
            frames,
            n_mels: self.n_mels(),
            fmin: self.fmin,
            fmax: self.fmax,
            frame_rate: s.frame_rate(),
        }
    }
}

pub fn mel_spectrogram(s: &Spectrogram, params: &MelParams) -> Result<MelSpectrogram, DspError> {
    let fb = MelFilterbank::new(
        s.sample_rate(),
        s.params().fft_size,
        params.n_mels,
        params.fmin,
        params.fmax,
    )?;
    Ok(fb.apply(s, params.log_floor))
}
