use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DspError, MelSpectrogram};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccParams {
    /// Number of coefficients kept per frame.
    pub n_coeffs: usize,
    /// Keep the 0th (log-energy) coefficient. When false, coefficients
    /// `1..=n_coeffs` are kept.
    pub include_c0: bool,
}

impl Default for MfccParams {
    fn default() -> Self {
        Self {
            n_coeffs: 13,
            include_c0: false,
        }
    }
}

impl MfccParams {
    pub fn validate(&self, n_mels: usize) -> Result<(), DspError> {
        let max = if self.include_c0 {
            n_mels
        } else {
            n_mels.saturating_sub(1)
        };
        if self.n_coeffs == 0 || self.n_coeffs > max {
            return Err(DspError::CoefficientRange {
                k: self.n_coeffs,
                max,
            });
        }
        Ok(())
    }

    fn first(&self) -> usize {
        usize::from(!self.include_c0)
    }
}

/// Cepstral coefficient vectors, `frames[t][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccSequence {
    frames: Vec<Vec<f64>>,
    k: usize,
    frame_rate: f64,
}

impl MfccSequence {
    pub fn new(k: usize, frames: Vec<Vec<f64>>, frame_rate: f64) -> Result<Self, DspError> {
        if k == 0 {
            return Err(DspError::InvalidMatrix(
                "coefficient count must be >= 1".into(),
            ));
        }
        for (t, row) in frames.iter().enumerate() {
            if row.len() != k {
                return Err(DspError::InvalidMatrix(format!(
                    "frame {t} has {} coefficients, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(DspError::InvalidMatrix(format!("frame {t} is not finite")));
            }
        }
        Ok(Self {
            frames,
            k,
            frame_rate,
        })
    }

    /// Builds a sequence from rows, taking K from the first row.
    pub fn from_rows(frames: Vec<Vec<f64>>) -> Result<Self, DspError> {
        let k = frames.first().map_or(0, Vec::len);
        Self::new(k, frames, 0.0)
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }
}

/// Orthonormal DCT-II basis of size `n`: `rows[k][i] = s_k cos(pi k (2i + 1) / 2n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DctBasis {
    rows: Vec<Vec<f64>>,
}

impl DctBasis {
    pub fn new(n: usize) -> Self {
        let rows = (0..n)
            .map(|k| {
                let scale = if k == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                };
                (0..n)
                    .map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Coefficients `first..first + count` of the forward transform.
    pub fn forward(&self, x: &[f64], first: usize, count: usize) -> Vec<f64> {
        self.rows[first..first + count]
            .iter()
            .map(|row| row.iter().zip(x).map(|(b, v)| b * v).sum())
            .collect()
    }

    /// Inverse transform of a full coefficient vector (DCT-III, the transpose).
    pub fn inverse(&self, c: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| self.rows.iter().zip(c).map(|(row, ck)| row[i] * ck).sum())
            .collect()
    }
}

pub(super) fn mfcc_with_basis(
    m: &MelSpectrogram,
    params: &MfccParams,
    basis: &DctBasis,
) -> Result<MfccSequence, DspError> {
    params.validate(m.n_mels())?;
    let first = params.first();
    let frames = m
        .frames()
        .iter()
        .map(|row| basis.forward(row, first, params.n_coeffs))
        .collect();
    MfccSequence::new(params.n_coeffs, frames, m.frame_rate())
}

/// Per-frame orthonormal DCT-II of the log mel vector.
pub fn mfcc(m: &MelSpectrogram, params: &MfccParams) -> Result<MfccSequence, DspError> {
    mfcc_with_basis(m, params, &DctBasis::new(m.n_mels()))
}
