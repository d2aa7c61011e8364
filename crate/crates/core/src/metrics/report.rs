use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dtw_align, mcd, mcd_dtw, mcd_dtw_sl, McdScale, MetricsError};
use crate::audio::{self, ChannelMode, Waveform, CANONICAL_RATE};
use crate::dsp::{FeatureConfig, FeatureExtractor};

/// How plain MCD treats waveforms of different length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthPolicy {
    /// Append zeros to the shorter time-domain waveform before extraction.
    #[default]
    ZeroPad,
    /// Fail when the frame counts differ.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub sample_rate: u32,
    pub channel_mode: ChannelMode,
    pub scale: McdScale,
    pub length_policy: LengthPolicy,
    pub features: FeatureConfig,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            sample_rate: CANONICAL_RATE,
            channel_mode: ChannelMode::Average,
            scale: McdScale::Paper,
            length_policy: LengthPolicy::ZeroPad,
            features: FeatureConfig::default(),
        }
    }
}

/// Metrics for one generated/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub mcd: f64,
    pub mcd_dtw: f64,
    pub mcd_dtw_sl: f64,
    pub eta: f64,
    /// Frame count of the generated utterance.
    pub m: usize,
    /// Frame count of the reference utterance.
    pub n: usize,
    pub path_len: usize,
    pub dtw_cost: f64,
}

/// Shares one feature extractor across many pairs.
pub struct PairEvaluator {
    config: MetricConfig,
    extractor: FeatureExtractor,
}

impl PairEvaluator {
    pub fn new(config: MetricConfig) -> Result<Self, MetricsError> {
        let extractor = FeatureExtractor::new(config.features.clone(), config.sample_rate)?;
        Ok(Self { config, extractor })
    }

    pub fn config(&self) -> &MetricConfig {
        &self.config
    }

    fn prepare(&self, w: &Waveform) -> Result<Waveform, MetricsError> {
        let mono = audio::to_mono(w, self.config.channel_mode)?;
        Ok(audio::resample(&mono, self.config.sample_rate)?)
    }

    pub fn evaluate(
        &self,
        generated: &Waveform,
        reference: &Waveform,
    ) -> Result<PairMetrics, MetricsError> {
        let side = |side, e: MetricsError| MetricsError::Side {
            side,
            source: Box::new(e),
        };
        let gen = self.prepare(generated).map_err(|e| side("generated", e))?;
        let reference = self.prepare(reference).map_err(|e| side("reference", e))?;
        self.evaluate_prepared(&gen, &reference)
    }

    fn evaluate_prepared(
        &self,
        gen: &Waveform,
        reference: &Waveform,
    ) -> Result<PairMetrics, MetricsError> {
        let scale = self.config.scale.factor();
        let gen_feats = self.extractor.mfcc(gen)?;
        let ref_feats = self.extractor.mfcc(reference)?;

        let alignment = dtw_align(&gen_feats, &ref_feats)?;
        let sl = mcd_dtw_sl(&alignment)?;

        let plain = if gen.len() == reference.len() {
            mcd(&gen_feats, &ref_feats, self.config.scale)?
        } else {
            match self.config.length_policy {
                LengthPolicy::Strict => {
                    return Err(MetricsError::LengthMismatch {
                        m: gen_feats.n_frames(),
                        n: ref_feats.n_frames(),
                    })
                }
                LengthPolicy::ZeroPad => {
                    let target = gen.len().max(reference.len());
                    let a = self.extractor.mfcc(&audio::pad_to_length(gen, target)?)?;
                    let b = self
                        .extractor
                        .mfcc(&audio::pad_to_length(reference, target)?)?;
                    mcd(&a, &b, self.config.scale)?
                }
            }
        };

        let dtw = scale * mcd_dtw(&alignment);
        Ok(PairMetrics {
            mcd: plain,
            mcd_dtw: dtw,
            mcd_dtw_sl: sl.eta * dtw,
            eta: sl.eta,
            m: alignment.m,
            n: alignment.n,
            path_len: alignment.path_len(),
            dtw_cost: alignment.cost,
        })
    }

    pub fn evaluate_files(
        &self,
        generated: &Path,
        reference: &Path,
    ) -> Result<PairMetrics, MetricsError> {
        let load = |path: &Path, side| {
            audio::read_wav(path).map_err(|e| MetricsError::Side {
                side,
                source: Box::new(e.into()),
            })
        };
        let gen = load(generated, "generated")?;
        let reference = load(reference, "reference")?;
        self.evaluate(&gen, &reference)
    }
}

/// One-off pair evaluation; builds the extractor for this call only.
pub fn evaluate_pair(
    generated: &Waveform,
    reference: &Waveform,
    config: &MetricConfig,
) -> Result<PairMetrics, MetricsError> {
    PairEvaluator::new(config.clone())?.evaluate(generated, reference)
}

/// Pair manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub id: String,
    pub generated: PathBuf,
    pub reference: PathBuf,
}

/// Parses JSON Lines; blank lines are skipped, line numbers are 1-based.
pub fn parse_pair_manifest(text: &str) -> Result<Vec<PairEntry>, MetricsError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| MetricsError::Manifest {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Loads a pair manifest; relative audio paths resolve against the manifest's directory.
pub fn load_pair_manifest(path: &Path) -> Result<Vec<PairEntry>, MetricsError> {
    let text = fs::read_to_string(path).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = parse_pair_manifest(&text)?;
    for e in &mut entries {
        if e.generated.is_relative() {
            e.generated = base.join(&e.generated);
        }
        if e.reference.is_relative() {
            e.reference = base.join(&e.reference);
        }
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub id: String,
    #[serde(flatten)]
    pub metrics: PairMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFailure {
    pub id: String,
    pub error: String,
}

/// Arithmetic means over successful pairs; `None` when every pair failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub mcd: Option<f64>,
    pub mcd_dtw: Option<f64>,
    pub mcd_dtw_sl: Option<f64>,
    pub eta: Option<f64>,
    pub n_pairs: usize,
    pub n_failed: usize,
}

impl Aggregate {
    fn from_rows(rows: &[PairRow], n_failed: usize) -> Self {
        let mean = |f: fn(&PairMetrics) -> f64| {
            (!rows.is_empty())
                .then(|| rows.iter().map(|r| f(&r.metrics)).sum::<f64>() / rows.len() as f64)
        };
        Self {
            mcd: mean(|m| m.mcd),
            mcd_dtw: mean(|m| m.mcd_dtw),
            mcd_dtw_sl: mean(|m| m.mcd_dtw_sl),
            eta: mean(|m| m.eta),
            n_pairs: rows.len(),
            n_failed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub rows: Vec<PairRow>,
    pub failures: Vec<PairFailure>,
    pub aggregate: Aggregate,
}

/// Evaluates every manifest pair on `jobs` worker threads (0 = rayon default).
/// Rows and failures come back in manifest order regardless of scheduling.
pub fn evaluate_corpus(
    pairs: &[PairEntry],
    config: &MetricConfig,
    jobs: usize,
) -> Result<CorpusReport, MetricsError> {
    let evaluator = PairEvaluator::new(config.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| MetricsError::Pool(e.to_string()))?;
    let results: Vec<Result<PairMetrics, MetricsError>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|p| evaluator.evaluate_files(&p.generated, &p.reference))
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (pair, result) in pairs.iter().zip(results) {
        match result {
            Ok(metrics) => rows.push(PairRow {
                id: pair.id.clone(),
                metrics,
            }),
            Err(e) => failures.push(PairFailure {
                id: pair.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let aggregate = Aggregate::from_rows(&rows, failures.len());
    Ok(CorpusReport {
        rows,
        failures,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn voice(rate: u32, secs: f64, f0: f64) -> Waveform {
        let n = (rate as f64 * secs) as usize;
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / rate as f64;
                (1..6)
                    .map(|h| 0.3 / h as f64 * (2.0 * PI * f0 * h as f64 * t).sin())
                    .sum::<f64>()
                    * (1.0 + 0.5 * (2.0 * PI * 3.0 * t).sin())
            })
            .collect();
        Waveform::mono(samples, rate).unwrap()
    }

    #[test]
    fn identical_pair_is_zero() {
        let w = voice(22050, 0.5, 150.0);
        let m = evaluate_pair(&w, &w, &MetricConfig::default()).unwrap();
        assert_eq!((m.mcd, m.mcd_dtw, m.mcd_dtw_sl), (0.0, 0.0, 0.0));
        assert_eq!(m.eta, 1.0);
    }

    #[test]
    fn swap_symmetry() {
        let cfg = MetricConfig::default();
        let a = voice(22050, 0.4, 150.0);
        let b = voice(22050, 0.55, 190.0);
        let ab = evaluate_pair(&a, &b, &cfg).unwrap();
        let ba = evaluate_pair(&b, &a, &cfg).unwrap();
        assert!((ab.mcd - ba.mcd).abs() < 1e-9);
        assert!((ab.mcd_dtw_sl - ba.mcd_dtw_sl).abs() < 1e-9);
        assert!((ab.mcd_dtw - ba.mcd_dtw).abs() < 1e-9);
        assert_eq!(ab.eta, ba.eta);
        assert_eq!((ab.m, ab.n), (ba.n, ba.m));
    }

    #[test]
    fn trailing_silence_is_penalized() {
        let cfg = MetricConfig::default();
        let gen = voice(22050, 1.0, 140.0);
        let reference = audio::pad_to_length(&gen, gen.len() + 11025).unwrap();
        let m = evaluate_pair(&gen, &reference, &cfg).unwrap();
        assert!(m.eta > 1.0);
        assert!(m.mcd_dtw_sl >= m.mcd_dtw);
        assert!((m.mcd_dtw_sl - m.eta * m.mcd_dtw).abs() <= 1e-12);
    }

    #[test]
    fn strict_mode_rejects_length_mismatch() {
        let cfg = MetricConfig {
            length_policy: LengthPolicy::Strict,
            ..MetricConfig::default()
        };
        let a = voice(22050, 0.3, 150.0);
        let b = voice(22050, 0.5, 150.0);
        assert!(matches!(
            evaluate_pair(&a, &b, &cfg),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn resamples_and_downmixes_on_ingest() {
        let cfg = MetricConfig::default();
        let mono = voice(44100, 0.3, 200.0);
        let stereo: Vec<f64> = mono.samples().iter().flat_map(|&s| [s, s]).collect();
        let stereo = Waveform::new(stereo, 44100, 2).unwrap();
        let m = evaluate_pair(&stereo, &mono, &cfg).unwrap();
        assert!(m.mcd.abs() < 1e-9);
    }

    #[test]
    fn conventional_scale_multiplies_everything() {
        let a = voice(22050, 0.4, 150.0);
        let b = voice(22050, 0.5, 170.0);
        let plain = evaluate_pair(&a, &b, &MetricConfig::default()).unwrap();
        let conv = evaluate_pair(
            &a,
            &b,
            &MetricConfig {
                scale: McdScale::Conventional,
                ..MetricConfig::default()
            },
        )
        .unwrap();
        let f = McdScale::Conventional.factor();
        assert!((conv.mcd - f * plain.mcd).abs() < 1e-9);
        assert!((conv.mcd_dtw - f * plain.mcd_dtw).abs() < 1e-9);
        assert!((conv.mcd_dtw_sl - f * plain.mcd_dtw_sl).abs() < 1e-9);
    }

    #[test]
    fn manifest_parse_errors_name_the_line() {
        let text =
            "{\"id\":\"a\",\"generated\":\"g.wav\",\"reference\":\"r.wav\"}\n\n{\"id\":\"b\"}\n";
        match parse_pair_manifest(text) {
            Err(MetricsError::Manifest { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn aggregate_is_mean_of_rows() {
        let row = |id: &str, v: f64| PairRow {
            id: id.into(),
            metrics: PairMetrics {
                mcd: v,
                mcd_dtw: v / 2.0,
                mcd_dtw_sl: v,
                eta: 2.0,
                m: 2,
                n: 1,
                path_len: 2,
                dtw_cost: v,
            },
        };
        let agg = Aggregate::from_rows(&[row("a", 2.0), row("b", 4.0)], 1);
        assert_eq!(agg.mcd, Some(3.0));
        assert_eq!(agg.mcd_dtw, Some(1.5));
        assert_eq!(agg.n_pairs, 2);
        assert_eq!(agg.n_failed, 1);
        let single = Aggregate::from_rows(&[row("a", 2.0)], 0);
        assert_eq!(single.mcd, Some(2.0));
        assert_eq!(Aggregate::from_rows(&[], 3).mcd, None);
    }
}
