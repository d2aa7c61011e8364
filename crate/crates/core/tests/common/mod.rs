//! Shared fixtures and independent reference implementations for integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use dubeval::audio::{write_wav, Waveform};

pub const RATE: u32 = 22_050;

pub fn sine(freq: f64, secs: f64, amp: f64) -> Vec<f64> {
    let n = (RATE as f64 * secs).round() as usize;
    (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / RATE as f64).sin())
        .collect()
}

/// A few harmonics with a slow glide, closer to voiced speech than a pure tone.
pub fn voiced(f0: f64, secs: f64, seed: u64) -> Vec<f64> {
    let n = (RATE as f64 * secs).round() as usize;
    let mut phase = 0.0;
    let wobble = 1.0 + (seed % 7) as f64 * 0.01;
    (0..n)
        .map(|i| {
            let t = i as f64 / RATE as f64;
            let f = f0 * wobble * (1.0 + 0.05 * (2.0 * PI * 2.0 * t).sin());
            phase += 2.0 * PI * f / RATE as f64;
            0.3 * phase.sin() + 0.15 * (2.0 * phase).sin() + 0.05 * (3.0 * phase).sin()
        })
        .collect()
}

pub fn mono(samples: Vec<f64>) -> Waveform {
    Waveform::mono(samples, RATE).unwrap()
}

pub fn write(path: &Path, samples: Vec<f64>) {
    write_wav(path, &mono(samples)).unwrap();
}

/// Minimum DTW cost by enumerating every monotone path with steps (1,1), (1,0), (0,1).
pub fn dtw_enumerate(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn dist(x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    }
    fn go(a: &[Vec<f64>], b: &[Vec<f64>], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + dist(&a[i], &b[j]);
        let (last_i, last_j) = (i + 1 == a.len(), j + 1 == b.len());
        if last_i && last_j {
            *best = best.min(acc);
            return;
        }
        if !last_i && !last_j {
            go(a, b, i + 1, j + 1, acc, best);
        }
        if !last_i {
            go(a, b, i + 1, j, acc, best);
        }
        if !last_j {
            go(a, b, i, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    go(a, b, 0, 0, 0.0, &mut best);
    best
}

/// Straight-line centroid classifier: normalize, average per label, cosine argmax.
/// Returns accuracy in percent.
pub fn accuracy_oracle(train: &[(String, Vec<f64>)], test: &[(String, Vec<f64>)]) -> f64 {
    let unit = |v: &[f64]| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for (label, v) in train {
        let u = unit(v);
        let e = sums.entry(label).or_insert_with(|| (vec![0.0; u.len()], 0));
        for (s, x) in e.0.iter_mut().zip(&u) {
            *s += x;
        }
        e.1 += 1;
    }
    let centroids: Vec<(&str, Vec<f64>)> = sums
        .into_iter()
        .map(|(l, (s, c))| (l, s.into_iter().map(|x| x / c as f64).collect()))
        .collect();
    let mut correct = 0;
    for (label, q) in test {
        let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut best_label = "";
        let mut best_sim = f64::NEG_INFINITY;
        for (l, c) in &centroids {
            let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if cn < 1e-12 {
                continue;
            }
            let sim = q.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() / (qn * cn);
            if sim > best_sim {
                best_sim = sim;
                best_label = l;
            }
        }
        if best_label == label {
            correct += 1;
        }
    }
    100.0 * correct as f64 / test.len() as f64
}

/// Textbook MFCC pipeline written from the definitions, without FFTs or shared code:
/// reflect-padded centred frames, periodic Hann window, direct DFT power spectrum,
/// HTK-mel triangular filters, natural log with a floor, orthonormal DCT-II.
pub struct OracleMfcc {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub n_coeffs: usize,
    pub include_c0: bool,
}

impl Default for OracleMfcc {
    fn default() -> Self {
        Self {
            n_fft: 1024,
            hop: 256,
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
            n_coeffs: 13,
            include_c0: false,
        }
    }
}

impl OracleMfcc {
    pub fn run(&self, x: &[f64], sample_rate: u32) -> Vec<Vec<f64>> {
        let n = self.n_fft;
        let half = n / 2;
        // numpy-style "reflect" padding: the edge sample is not repeated.
        let mut padded = Vec::with_capacity(x.len() + n);
        for k in (1..=half).rev() {
            padded.push(x[k]);
        }
        padded.extend_from_slice(x);
        for k in 1..=half {
            padded.push(x[x.len() - 1 - k]);
        }
        let window: Vec<f64> = (0..n)
            .map(|i| (PI * i as f64 / n as f64).sin().powi(2))
            .collect();

        let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
        let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
        let (m_lo, m_hi) = (mel(self.fmin), mel(self.fmax));
        let step = (m_hi - m_lo) / (self.n_mels + 1) as f64;
        let points: Vec<f64> = (0..self.n_mels + 2)
            .map(|i| inv(m_lo + step * i as f64))
            .collect();
        let n_bins = half + 1;
        let freq = |k: usize| sample_rate as f64 * k as f64 / n as f64;
        let mut filters = vec![vec![0.0; n_bins]; self.n_mels];
        for (b, filter) in filters.iter_mut().enumerate() {
            let (l, c, r) = (points[b], points[b + 1], points[b + 2]);
            for (k, w) in filter.iter_mut().enumerate() {
                let f = freq(k);
                *w = if f > l && f <= c {
                    (f - l) / (c - l)
                } else if f > c && f < r {
                    (r - f) / (r - c)
                } else {
                    0.0
                };
            }
        }

        let first = usize::from(!self.include_c0);
        let m = self.n_mels as f64;
        let n_frames = 1 + (padded.len() - n) / self.hop;
        (0..n_frames)
            .map(|t| {
                let frame: Vec<f64> = (0..n)
                    .map(|i| padded[t * self.hop + i] * window[i])
                    .collect();
                let power: Vec<f64> = (0..n_bins)
                    .map(|k| {
                        let (mut re, mut im) = (0.0, 0.0);
                        for (i, s) in frame.iter().enumerate() {
                            let ang = 2.0 * PI * ((k * i) % n) as f64 / n as f64;
                            re += s * ang.cos();
                            im -= s * ang.sin();
                        }
                        re * re + im * im
                    })
                    .collect();
                let log_mel: Vec<f64> = filters
                    .iter()
                    .map(|f| {
                        f.iter()
                            .zip(&power)
                            .map(|(w, p)| w * p)
                            .sum::<f64>()
                            .max(1e-10)
                            .ln()
                    })
                    .collect();
                (first..first + self.n_coeffs)
                    .map(|q| {
                        let sum: f64 = log_mel
                            .iter()
                            .enumerate()
                            .map(|(j, v)| v * (PI * q as f64 * (j as f64 + 0.5) / m).cos())
                            .sum();
                        let norm = if q == 0 {
                            (1.0 / m).sqrt()
                        } else {
                            (2.0 / m).sqrt()
                        };
                        norm * sum
                    })
                    .collect()
            })
            .collect()
    }
}

/// `|a - b| <= tol * max(1, |b|)` elementwise.
pub fn close_rel(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("frame count {} vs {}", a.len(), b.len()));
    }
    for (t, (ra, rb)) in a.iter().zip(b).enumerate() {
        if ra.len() != rb.len() {
            return Err(format!("frame {t}: width {} vs {}", ra.len(), rb.len()));
        }
        for (k, (x, y)) in ra.iter().zip(rb).enumerate() {
            if (x - y).abs() > tol * y.abs().max(1.0) {
                return Err(format!("frame {t} coeff {k}: {x} vs {y}"));
            }
        }
    }
    Ok(())
}
