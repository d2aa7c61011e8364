//! YIN-style fundamental frequency tracking and pooled pitch statistics.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::DspError;
use crate::audio::Waveform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchParams {
    pub f_min: f64,
    pub f_max: f64,
    /// Cumulative-mean-normalized difference threshold; dips above it are unvoiced.
    pub threshold: f64,
    pub hop: usize,
    /// Integration window of the difference function, in samples.
    pub window: usize,
}

impl Default for PitchParams {
    fn default() -> Self {
        Self {
            f_min: 50.0,
            f_max: 600.0,
            threshold: 0.15,
            hop: 256,
            window: 1024,
        }
    }
}

impl PitchParams {
    pub fn validate(&self, sample_rate: u32) -> Result<(), DspError> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max <= nyquist) {
            return Err(DspError::InvalidPitchBand {
                f_min: self.f_min,
                f_max: self.f_max,
                sample_rate,
            });
        }
        if self.hop == 0 || self.window == 0 {
            return Err(DspError::InvalidFrameParams(
                "pitch hop and window must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-frame f0 in Hz; 0 marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchTrack {
    pub values: Vec<f64>,
    pub frame_rate: f64,
}

impl PitchTrack {
    pub fn voiced(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|&v| v > 0.0)
    }
}

/// Frames are centred at `t * hop` (same count as the centred STFT with
/// `win_length = window`); samples outside the signal read as zero.
pub fn pitch_track(w: &Waveform, params: &PitchParams) -> Result<PitchTrack, DspError> {
    if w.channels() != 1 {
        return Err(DspError::NotMono(w.channels()));
    }
    let sr = w.sample_rate();
    params.validate(sr)?;
    let x = w.samples();
    if x.is_empty() {
        return Err(DspError::EmptyWaveform);
    }
    let rate = sr as f64;
    let tau_min = ((rate / params.f_max).floor() as usize).max(2);
    let tau_max = (rate / params.f_min).ceil() as usize;
    let win = params.window;
    let n_frames = 1 + (x.len() + 2 * (win / 2) - win) / params.hop;

    let mut segment = vec![0.0; win + tau_max + 2];
    let mut diff = vec![0.0; tau_max + 2];
    let mut cmnd = vec![1.0; tau_max + 2];
    let mut values = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let start = (t * params.hop) as i64 - (win / 2) as i64;
        for (i, s) in segment.iter_mut().enumerate() {
            let idx = start + i as i64;
            *s = if idx >= 0 && (idx as usize) < x.len() {
                x[idx as usize]
            } else {
                0.0
            };
        }
        let f0 = estimate_frame(
            &segment,
            win,
            tau_min,
            tau_max,
            params.threshold,
            &mut diff,
            &mut cmnd,
        )
        .map(|tau| rate / tau)
        .filter(|f| (params.f_min..=params.f_max).contains(f))
        .unwrap_or(0.0);
        values.push(f0);
    }
    Ok(PitchTrack {
        values,
        frame_rate: rate / params.hop as f64,
    })
}

/// Returns the refined period in samples, or `None` for an unvoiced frame.
fn estimate_frame(
    seg: &[f64],
    win: usize,
    tau_min: usize,
    tau_max: usize,
    threshold: f64,
    diff: &mut [f64],
    cmnd: &mut [f64],
) -> Option<f64> {
    let energy: f64 = seg[..win].iter().map(|s| s * s).sum();
    if energy <= f64::MIN_POSITIVE {
        return None;
    }
    let last = tau_max + 1;
    diff[0] = 0.0;
    for tau in 1..=last {
        diff[tau] = seg[..win]
            .iter()
            .zip(&seg[tau..tau + win])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
    }
    cmnd[0] = 1.0;
    let mut running = 0.0;
    for tau in 1..=last {
        running += diff[tau];
        cmnd[tau] = if running > 0.0 {
            diff[tau] * tau as f64 / running
        } else {
            1.0
        };
    }

    let mut tau = tau_min;
    while tau <= tau_max && cmnd[tau] >= threshold {
        tau += 1;
    }
    if tau > tau_max {
        return None;
    }
    while tau < tau_max && cmnd[tau + 1] < cmnd[tau] {
        tau += 1;
    }

    let (a, b, c) = (cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > f64::EPSILON {
        (0.5 * (a - c) / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Some(tau as f64 + shift)
}

/// Pooled population statistics over pitch frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchStats {
    pub mean: f64,
    pub variance: f64,
    pub n_frames: usize,
}

impl fmt::Display for PitchStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.variance)
    }
}

/// Population mean and variance pooled over all tracks. Unvoiced (0 Hz) frames
/// are dropped unless `include_unvoiced` is set.
pub fn pitch_stats(tracks: &[PitchTrack], include_unvoiced: bool) -> Result<PitchStats, DspError> {
    let retained = || {
        tracks
            .iter()
            .flat_map(|t| t.values.iter().copied())
            .filter(move |&v| include_unvoiced || v > 0.0)
    };
    let n = retained().count();
    if n == 0 {
        return Err(DspError::NoPitchFrames);
    }
    let mean = retained().sum::<f64>() / n as f64;
    let variance = retained().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    Ok(PitchStats {
        mean,
        variance,
        n_frames: n,
    })
}
