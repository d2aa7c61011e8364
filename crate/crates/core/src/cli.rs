//! The `dubeval` command-line frontend.
//!
//! Every subcommand writes exactly one JSON document (to stdout or `--out`)
//! that echoes the effective configuration next to the result. Failures go to
//! stderr as `{"error": {"kind": ..., "message": ...}}` with exit code 2 for
//! usage/validation problems and 1 for runtime/data problems.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::audio::{self, ChannelMode, CANONICAL_RATE};
use crate::corpus::{self, AudioMode, PlanOptions, SplitRatios};
use crate::dsp::{
    FeatureConfig, FeatureExtractor, FrameParams, MelParams, MfccParams, PitchParams,
};
use crate::eval::{self, LabelKey};
use crate::metrics::{self, LengthPolicy, McdScale, MetricConfig, PairEvaluator};

#[derive(Debug, Parser)]
#[command(
    name = "dubeval",
    version,
    about = "Speech synthesis evaluation and corpus tooling"
)]
struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Human-readable output instead of compact JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract mel, MFCC, energy and pitch features from one WAV file.
    Features {
        input: PathBuf,
        #[command(flatten)]
        feat: FeatureArgs,
        #[command(flatten)]
        pitch: PitchArgs,
    },
    /// MCD, MCD-DTW and MCD-DTW-SL for one generated/reference pair.
    Mcd {
        generated: PathBuf,
        reference: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Evaluate every pair in a JSONL manifest of {id, generated, reference}.
    Batch {
        manifest: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Centroid cosine accuracy of embeddings.
    Accuracy {
        /// Embeddings used to build the centroids (JSONL).
        #[arg(long)]
        train: PathBuf,
        /// Embeddings to classify (JSONL).
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = LabelKey::Speaker)]
        label_key: LabelKey,
    },
    /// Mean opinion score with a 95% confidence half-width.
    Mos {
        /// Ratings as single-column CSV or JSONL {rater, item, score}.
        ratings: PathBuf,
    },
    /// SubRip subtitle tools.
    Srt {
        #[command(subcommand)]
        action: SrtCommand,
    },
    /// Seeded train/validation/test split of a clip manifest.
    Split {
        manifest: PathBuf,
        /// Required: all randomness comes from this seed.
        #[arg(long)]
        seed: u64,
        /// Train, validation and test fractions.
        #[arg(long, default_value = "0.6,0.1,0.3")]
        ratios: SplitRatios,
        /// Split each speaker's clips separately.
        #[arg(long)]
        stratify_speaker: bool,
    },
    /// Corpus statistics of a clip manifest.
    Stats {
        manifest: PathBuf,
        /// Add pitch mean/variance computed from each record's audio_path.
        #[arg(long)]
        with_pitch: bool,
        /// Count unvoiced (0 Hz) frames in the pitch statistics.
        #[arg(long)]
        include_unvoiced: bool,
        /// Keep only this many ranked words (0 = all).
        #[arg(long, default_value_t = 30)]
        top_words: usize,
        #[arg(long, default_value_t = CANONICAL_RATE)]
        sample_rate: u32,
        #[arg(long, default_value_t = ChannelMode::Average)]
        channel_mode: ChannelMode,
        #[command(flatten)]
        pitch: PitchArgs,
    },
}

#[derive(Debug, Subcommand)]
enum SrtCommand {
    /// Parse an .srt file into JSON cues.
    Parse { input: PathBuf },
    /// Plan one audio/video cut per cue.
    Plan {
        input: PathBuf,
        /// Source movie file.
        #[arg(long)]
        movie: PathBuf,
        /// Clip name prefix (default: movie file stem).
        #[arg(long)]
        movie_id: Option<String>,
        /// Directory for planned clip files.
        #[arg(long, default_value = "clips")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = AudioMode::CenterChannel)]
        audio_mode: AudioMode,
        #[arg(long, default_value_t = CANONICAL_RATE)]
        sample_rate: u32,
        /// Also emit FFmpeg argument vectors.
        #[arg(long)]
        commands: bool,
    },
}

#[derive(Debug, Args)]
struct FeatureArgs {
    /// Analysis rate; input is resampled to it.
    #[arg(long, default_value_t = CANONICAL_RATE)]
    sample_rate: u32,
    /// Multichannel reduction: center-channel, average or a channel index.
    #[arg(long, default_value_t = ChannelMode::Average)]
    channel_mode: ChannelMode,
    #[arg(long, default_value_t = 1024)]
    n_fft: usize,
    #[arg(long, default_value_t = 256)]
    hop: usize,
    #[arg(long, default_value_t = 1024)]
    win_length: usize,
    #[arg(long, default_value_t = 80)]
    n_mels: usize,
    #[arg(long, default_value_t = 0.0)]
    fmin: f64,
    #[arg(long, default_value_t = 8000.0)]
    fmax: f64,
    /// MFCC coefficients per frame (K).
    #[arg(long, default_value_t = 13)]
    n_mfcc: usize,
    /// Keep c0 instead of starting at c1.
    #[arg(long)]
    include_c0: bool,
}

#[derive(Debug, Args)]
struct PitchArgs {
    #[arg(long, default_value_t = 50.0)]
    f0_min: f64,
    #[arg(long, default_value_t = 600.0)]
    f0_max: f64,
    /// Voicing threshold on the normalized difference function.
    #[arg(long, default_value_t = 0.15)]
    yin_threshold: f64,
}

#[derive(Debug, Args)]
struct MetricArgs {
    #[command(flatten)]
    feat: FeatureArgs,
    /// paper (plain mean distance) or conventional (x 10√2/ln10).
    #[arg(long, default_value_t = McdScale::Paper)]
    scale: McdScale,
    /// Plain MCD on unequal lengths: zero-pad or strict.
    #[arg(long, default_value_t = LengthPolicyArg::ZeroPad, value_enum)]
    length_policy: LengthPolicyArg,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum LengthPolicyArg {
    ZeroPad,
    Strict,
}

impl std::fmt::Display for LengthPolicyArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LengthPolicyArg::ZeroPad => "zero-pad",
            LengthPolicyArg::Strict => "strict",
        })
    }
}

impl FeatureArgs {
    fn config(&self, pitch: Option<&PitchArgs>) -> FeatureConfig {
        let defaults = PitchParams::default();
        FeatureConfig {
            frame: FrameParams {
                fft_size: self.n_fft,
                hop: self.hop,
                win_length: self.win_length,
                ..FrameParams::default()
            },
            mel: MelParams {
                n_mels: self.n_mels,
                fmin: self.fmin,
                fmax: self.fmax,
                ..MelParams::default()
            },
            mfcc: MfccParams {
                n_coeffs: self.n_mfcc,
                include_c0: self.include_c0,
            },
            // Pitch frames share the STFT hop so they index the same frames.
            pitch: PitchParams {
                f_min: pitch.map_or(defaults.f_min, |p| p.f0_min),
                f_max: pitch.map_or(defaults.f_max, |p| p.f0_max),
                threshold: pitch.map_or(defaults.threshold, |p| p.yin_threshold),
                hop: self.hop,
                window: self.win_length,
            },
        }
    }
}

impl MetricArgs {
    fn config(&self) -> MetricConfig {
        MetricConfig {
            sample_rate: self.feat.sample_rate,
            channel_mode: self.feat.channel_mode,
            scale: self.scale,
            length_policy: match self.length_policy {
                LengthPolicyArg::ZeroPad => LengthPolicy::ZeroPad,
                LengthPolicyArg::Strict => LengthPolicy::Strict,
            },
            features: self.feat.config(None),
        }
    }
}

enum CliError {
    /// Bad flags or configuration: exit 2.
    Usage(String),
    /// Failure while reading or processing data: exit 1.
    Runtime { kind: &'static str, message: String },
}

impl CliError {
    fn runtime(kind: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Runtime {
            kind,
            message: e.to_string(),
        }
    }

    fn report(&self) -> (i32, Value) {
        let (code, kind, message) = match self {
            CliError::Usage(m) => (2, "usage", m.as_str()),
            CliError::Runtime { kind, message } => (1, *kind, message.as_str()),
        };
        (
            code,
            json!({ "error": { "kind": kind, "message": message } }),
        )
    }
}

/// Output of one successful run: the JSON document plus an optional text rendering.
struct Output {
    json: Value,
    text: Option<String>,
}

impl Output {
    fn json(json: Value) -> Self {
        Self { json, text: None }
    }
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("result types serialize to JSON")
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let (code, doc) = CliError::Usage(clap_message(&e)).report();
            eprintln!("{doc}");
            return code;
        }
    };
    let result = dispatch(&cli.command).and_then(|out| emit(&out, cli.out.as_deref(), cli.pretty));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let (code, doc) = e.report();
            eprintln!("{doc}");
            code
        }
    }
}

/// Flattens clap's rendered error into one line, without the usage block.
fn clap_message(e: &clap::Error) -> String {
    let rendered = e.render().to_string();
    rendered
        .lines()
        .map(str::trim)
        .take_while(|l| !l.starts_with("Usage:"))
        .filter(|l| !l.is_empty() && !l.starts_with("For more information"))
        .collect::<Vec<_>>()
        .join(" ")
        .trim_start_matches("error: ")
        .to_string()
}

fn emit(out: &Output, path: Option<&Path>, pretty: bool) -> Result<(), CliError> {
    let body = match (&out.text, pretty) {
        (Some(text), true) => text.clone(),
        (None, true) => serde_json::to_string_pretty(&out.json).expect("valid JSON") + "\n",
        (_, false) => out.json.to_string() + "\n",
    };
    match path {
        Some(p) => {
            fs::write(p, body).map_err(|e| CliError::runtime("io", format!("{}: {e}", p.display())))
        }
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::runtime("io", e)),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::runtime("io", format!("{}: {e}", path.display())))
}

fn dispatch(cmd: &Command) -> Result<Output, CliError> {
    match cmd {
        Command::Features { input, feat, pitch } => features(input, feat, pitch),
        Command::Mcd {
            generated,
            reference,
            metric,
        } => mcd(generated, reference, metric),
        Command::Batch {
            manifest,
            jobs,
            metric,
        } => batch(manifest, *jobs, metric),
        Command::Accuracy {
            train,
            test,
            label_key,
        } => accuracy(train, test, *label_key),
        Command::Mos { ratings } => mos(ratings),
        Command::Srt { action } => srt(action),
        Command::Split {
            manifest,
            seed,
            ratios,
            stratify_speaker,
        } => split(manifest, *seed, *ratios, *stratify_speaker),
        Command::Stats {
            manifest,
            with_pitch,
            include_unvoiced,
            top_words,
            sample_rate,
            channel_mode,
            pitch,
        } => stats(
            manifest,
            StatsOpts {
                with_pitch: *with_pitch,
                include_unvoiced: *include_unvoiced,
                top_words: *top_words,
                sample_rate: *sample_rate,
                channel_mode: *channel_mode,
                pitch,
            },
        ),
    }
}

fn features(input: &Path, feat: &FeatureArgs, pitch: &PitchArgs) -> Result<Output, CliError> {
    let config = feat.config(Some(pitch));
    let extractor = FeatureExtractor::new(config.clone(), feat.sample_rate)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let w = audio::load_mono(input, feat.channel_mode, feat.sample_rate)
        .map_err(|e| CliError::runtime("audio", e))?;
    let set = extractor
        .extract(&w)
        .map_err(|e| CliError::runtime("dsp", e))?;
    Ok(Output::json(json!({
        "command": "features",
        "config": {
            "sample_rate": feat.sample_rate,
            "channel_mode": feat.channel_mode,
            "features": config,
        },
        "input": input,
        "features": set,
    })))
}

fn evaluator(metric: &MetricArgs) -> Result<PairEvaluator, CliError> {
    PairEvaluator::new(metric.config()).map_err(|e| CliError::Usage(e.to_string()))
}

fn mcd(generated: &Path, reference: &Path, metric: &MetricArgs) -> Result<Output, CliError> {
    let ev = evaluator(metric)?;
    let m = ev
        .evaluate_files(generated, reference)
        .map_err(|e| CliError::runtime("metrics", e))?;
    let text = format!(
        "MCD         {:.2}\nMCD-DTW     {:.2}\nMCD-DTW-SL  {:.2}\neta         {:.3}  (M={}, N={})\n",
        m.mcd, m.mcd_dtw, m.mcd_dtw_sl, m.eta, m.m, m.n
    );
    Ok(Output {
        json: json!({
            "command": "mcd",
            "config": ev.config(),
            "generated": generated,
            "reference": reference,
            "metrics": m,
        }),
        text: Some(text),
    })
}

fn batch(manifest: &Path, jobs: usize, metric: &MetricArgs) -> Result<Output, CliError> {
    evaluator(metric)?;
    let config = metric.config();
    let pairs =
        metrics::load_pair_manifest(manifest).map_err(|e| CliError::runtime("manifest", e))?;
    let report = metrics::evaluate_corpus(&pairs, &config, jobs)
        .map_err(|e| CliError::runtime("metrics", e))?;

    let mut text = format!(
        "{:<24} {:>8} {:>8} {:>10} {:>6}\n",
        "id", "MCD", "MCD-DTW", "MCD-DTW-SL", "eta"
    );
    for r in &report.rows {
        let m = &r.metrics;
        let _ = writeln!(
            text,
            "{:<24} {:>8.2} {:>8.2} {:>10.2} {:>6.3}",
            r.id, m.mcd, m.mcd_dtw, m.mcd_dtw_sl, m.eta
        );
    }
    let a = &report.aggregate;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
    let _ = writeln!(
        text,
        "{:<24} {:>8} {:>8} {:>10}\n{} pairs, {} failed",
        "mean",
        fmt(a.mcd),
        fmt(a.mcd_dtw),
        fmt(a.mcd_dtw_sl),
        a.n_pairs,
        a.n_failed
    );
    for f in &report.failures {
        let _ = writeln!(text, "failed {}: {}", f.id, f.error);
    }
    let mut json = to_value(&report);
    json["command"] = json!("batch");
    json["config"] = json!({ "jobs": jobs, "metrics": config });
    json["manifest"] = json!(manifest);
    Ok(Output {
        json,
        text: Some(text),
    })
}

fn accuracy(train: &Path, test: &Path, key: LabelKey) -> Result<Output, CliError> {
    let load = |p: &Path| eval::load_embeddings(p, key).map_err(|e| CliError::runtime("eval", e));
    let (tr, te) = (load(train)?, load(test)?);
    let report = eval::accuracy_report(&tr, &te, key).map_err(|e| CliError::runtime("eval", e))?;
    let text = format!(
        "{} accuracy: {:.2}%  ({} train, {} test)\n",
        key, report.accuracy_percent, report.n_train, report.n_test
    );
    Ok(Output {
        json: json!({
            "command": "accuracy",
            "config": { "train": train, "test": test, "label_key": key },
            "result": report,
        }),
        text: Some(text),
    })
}

fn mos(ratings: &Path) -> Result<Output, CliError> {
    let scores =
        eval::parse_ratings(&read_text(ratings)?).map_err(|e| CliError::runtime("eval", e))?;
    let summary = eval::mos_aggregate(&scores).map_err(|e| CliError::runtime("eval", e))?;
    Ok(Output {
        json: json!({
            "command": "mos",
            "config": { "ratings": ratings },
            "result": summary,
            "display": summary.to_string(),
        }),
        text: Some(format!("MOS {summary}  (n = {})\n", summary.n)),
    })
}

fn srt(action: &SrtCommand) -> Result<Output, CliError> {
    match action {
        SrtCommand::Parse { input } => {
            let entries =
                corpus::parse_srt(&read_text(input)?).map_err(|e| CliError::runtime("srt", e))?;
            Ok(Output::json(json!({
                "command": "srt parse",
                "config": { "input": input },
                "entries": entries,
            })))
        }
        SrtCommand::Plan {
            input,
            movie,
            movie_id,
            out_dir,
            audio_mode,
            sample_rate,
            commands,
        } => {
            if *sample_rate == 0 {
                return Err(CliError::Usage("--sample-rate must be positive".into()));
            }
            let entries =
                corpus::parse_srt(&read_text(input)?).map_err(|e| CliError::runtime("srt", e))?;
            let opts = PlanOptions {
                movie_id: movie_id
                    .clone()
                    .unwrap_or_else(|| corpus::movie_id_from_path(movie)),
                out_dir: out_dir.clone(),
                audio_mode: *audio_mode,
                sample_rate: *sample_rate,
                emit_commands: *commands,
            };
            let plan = corpus::build_clip_plan(&entries, movie, &opts)
                .map_err(|e| CliError::runtime("corpus", e))?;
            let mut json = to_value(&plan);
            json["command"] = json!("srt plan");
            json["config"] = json!({
                "input": input,
                "movie": movie,
                "movie_id": opts.movie_id,
                "out_dir": out_dir,
                "audio_mode": audio_mode,
                "sample_rate": sample_rate,
                "commands": commands,
            });
            Ok(Output::json(json))
        }
    }
}

fn load_manifest(path: &Path) -> Result<Vec<corpus::ClipRecord>, CliError> {
    corpus::load_manifest(path).map_err(|e| CliError::runtime("manifest", e))
}

fn split(
    manifest: &Path,
    seed: u64,
    ratios: SplitRatios,
    stratify: bool,
) -> Result<Output, CliError> {
    let records = load_manifest(manifest)?;
    let s = corpus::split_dataset(&records, ratios, seed, stratify)
        .map_err(|e| CliError::runtime("corpus", e))?;
    let (a, b, c) = s.sizes();
    let text = format!("seed {seed}: train {a}, val {b}, test {c}\n");
    Ok(Output {
        json: json!({
            "command": "split",
            "config": { "manifest": manifest, "seed": seed, "ratios": ratios, "stratify_speaker": stratify },
            "sizes": { "train": a, "val": b, "test": c },
            "split": s,
        }),
        text: Some(text),
    })
}

struct StatsOpts<'a> {
    with_pitch: bool,
    include_unvoiced: bool,
    top_words: usize,
    sample_rate: u32,
    channel_mode: ChannelMode,
    pitch: &'a PitchArgs,
}

fn stats(manifest: &Path, o: StatsOpts<'_>) -> Result<Output, CliError> {
    let params = PitchParams {
        f_min: o.pitch.f0_min,
        f_max: o.pitch.f0_max,
        threshold: o.pitch.yin_threshold,
        ..PitchParams::default()
    };
    if o.with_pitch {
        params
            .validate(o.sample_rate)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let records = load_manifest(manifest)?;
    let tracks = if o.with_pitch {
        let base = manifest.parent().unwrap_or(Path::new(""));
        let mut tracks = Vec::with_capacity(records.len());
        for r in &records {
            let rel = r.audio_path.as_ref().ok_or_else(|| {
                CliError::runtime("manifest", format!("clip {} has no audio_path", r.id()))
            })?;
            let path = base.join(rel);
            let w = audio::load_mono(&path, o.channel_mode, o.sample_rate)
                .map_err(|e| CliError::runtime("audio", e))?;
            tracks.push(
                crate::dsp::pitch_track(&w, &params).map_err(|e| CliError::runtime("dsp", e))?,
            );
        }
        Some(tracks)
    } else {
        None
    };
    let mut s = corpus::corpus_stats(&records, tracks.as_deref(), o.include_unvoiced)
        .map_err(|e| CliError::runtime("corpus", e))?;
    if o.top_words > 0 {
        s.word_counts.truncate(o.top_words);
    }

    let mut text = format!(
        "movies {}  clips {}  speakers {}\navg words {:.2}  avg duration {:.2} s\n",
        s.n_movies, s.n_clips, s.n_speakers, s.avg_subtitle_words, s.avg_duration_s
    );
    if let (Some(m), Some(v)) = (s.pitch_mean_hz, s.pitch_variance) {
        let _ = writeln!(text, "pitch {m:.2} ± {v:.2}");
    }
    for (e, c) in &s.emotion_counts {
        let _ = writeln!(text, "{e:<9} {c}");
    }
    Ok(Output {
        json: json!({
            "command": "stats",
            "config": {
                "manifest": manifest,
                "with_pitch": o.with_pitch,
                "include_unvoiced": o.include_unvoiced,
                "top_words": o.top_words,
                "sample_rate": o.sample_rate,
                "channel_mode": o.channel_mode,
                "pitch": params,
            },
            "stats": s,
        }),
        text: Some(text),
    })
}
