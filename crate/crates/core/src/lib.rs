//! Evaluation toolkit for visual voice cloning / dubbing-style speech synthesis.
//!
//! - [`audio`]: WAV ingestion, channel selection, resampling, padding.
//! - [`dsp`]: STFT, mel spectrogram, MFCC, energy and pitch features.
//! - [`metrics`]: MCD, DTW alignment, MCD-DTW and the length-weighted MCD-DTW-SL.
//! - [`eval`]: centroid-based identity/emotion accuracy and MOS aggregation.
//! - [`corpus`]: SRT parsing, clip plans, dataset splits and corpus statistics.
//! - [`cli`]: the `dubeval` command-line frontend.
//!
//! ```
//! use dubeval::metrics::{dtw_align_frames, mcd_dtw_sl};
//!
//! let generated = vec![vec![0.0], vec![1.0], vec![2.0]];
//! let reference = vec![vec![0.0], vec![2.0]];
//! let alignment = dtw_align_frames(&generated, &reference).unwrap();
//! let sl = mcd_dtw_sl(&alignment).unwrap();
//! assert_eq!(alignment.cost, 1.0);
//! assert_eq!(alignment.path_len(), 3);
//! assert_eq!((sl.eta, sl.score), (1.5, 0.5));
//! ```

pub mod audio;
pub mod cli;
pub mod corpus;
pub mod dsp;
pub mod eval;
pub mod metrics;
