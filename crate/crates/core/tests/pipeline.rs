mod common;

use std::fs;

use common::{mono, sine, voiced, write, RATE};
use dubeval::audio::{write_wav, ChannelMode, Waveform};
use dubeval::metrics::{
    evaluate_corpus, evaluate_pair, load_pair_manifest, LengthPolicy, McdScale, MetricConfig,
    PairEvaluator,
};

#[test]
fn identical_pair_is_zero() {
    let w = mono(voiced(150.0, 0.6, 0));
    let m = evaluate_pair(&w, &w, &MetricConfig::default()).unwrap();
    assert_eq!(
        (m.mcd, m.mcd_dtw, m.mcd_dtw_sl, m.eta),
        (0.0, 0.0, 0.0, 1.0)
    );
    assert_eq!(m.path_len, m.m);
}

#[test]
fn trailing_silence_raises_eta() {
    let base = voiced(150.0, 0.8, 1);
    let mut longer = base.clone();
    longer.extend(std::iter::repeat_n(0.0, RATE as usize / 2));
    let m = evaluate_pair(&mono(longer), &mono(base), &MetricConfig::default()).unwrap();
    assert!(m.eta > 1.0);
    assert!(m.m > m.n);
    assert!(m.mcd_dtw_sl >= m.mcd_dtw);
    assert!((m.mcd_dtw_sl - m.eta * m.mcd_dtw).abs() < 1e-12);
    assert!((m.eta - m.m as f64 / m.n as f64).abs() < 1e-15);
}

#[test]
fn strict_policy_rejects_unequal_lengths() {
    let cfg = MetricConfig {
        length_policy: LengthPolicy::Strict,
        ..MetricConfig::default()
    };
    let a = mono(sine(200.0, 0.5, 0.3));
    let b = mono(sine(200.0, 0.7, 0.3));
    assert!(evaluate_pair(&a, &b, &cfg).is_err());
    assert!(evaluate_pair(&a, &b, &MetricConfig::default()).is_ok());
}

#[test]
fn conventional_scale_multiplies_every_metric() {
    let a = mono(voiced(140.0, 0.5, 2));
    let b = mono(voiced(170.0, 0.6, 3));
    let p = evaluate_pair(&a, &b, &MetricConfig::default()).unwrap();
    let c = evaluate_pair(
        &a,
        &b,
        &MetricConfig {
            scale: McdScale::Conventional,
            ..MetricConfig::default()
        },
    )
    .unwrap();
    let k = 6.141851463713754;
    for (x, y) in [
        (p.mcd, c.mcd),
        (p.mcd_dtw, c.mcd_dtw),
        (p.mcd_dtw_sl, c.mcd_dtw_sl),
    ] {
        assert!((x * k - y).abs() < 1e-9 * y.abs().max(1.0));
    }
    assert_eq!(p.eta, c.eta);
}

#[test]
fn files_at_other_rates_and_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let x = voiced(160.0, 0.5, 4);
    write(&dir.path().join("ref.wav"), x.clone());

    // The same signal at 16 kHz is resampled before analysis.
    let n16 = (x.len() as f64 * 16_000.0 / RATE as f64) as usize;
    let x16: Vec<f64> = (0..n16)
        .map(|i| {
            let t = i as f64 * RATE as f64 / 16_000.0;
            let k = t.floor() as usize;
            let f = t - k as f64;
            x[k] * (1.0 - f) + x.get(k + 1).copied().unwrap_or(0.0) * f
        })
        .collect();
    write_wav(
        dir.path().join("gen16.wav"),
        &Waveform::mono(x16, 16_000).unwrap(),
    )
    .unwrap();

    let ev = PairEvaluator::new(MetricConfig::default()).unwrap();
    let m = ev
        .evaluate_files(&dir.path().join("gen16.wav"), &dir.path().join("ref.wav"))
        .unwrap();
    assert!(m.mcd_dtw.is_finite());
    assert!((m.m as i64 - m.n as i64).abs() <= 1);

    // Six-channel file carrying the signal in the centre channel only.
    let mut inter = Vec::with_capacity(x.len() * 6);
    for s in &x {
        inter.extend([0.0, 0.0, *s, 0.0, 0.0, 0.0]);
    }
    let six = Waveform::new(inter, RATE, 6).unwrap();
    let w = |samples: &Waveform, name: &str| {
        let spec = hound::WavSpec {
            channels: samples.channels(),
            sample_rate: RATE,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut out = hound::WavWriter::create(dir.path().join(name), spec).unwrap();
        for v in samples.samples() {
            out.write_sample(*v as f32).unwrap();
        }
        out.finalize().unwrap();
    };
    w(&six, "six.wav");
    w(&mono(x.clone()), "ref32.wav");
    let centre = PairEvaluator::new(MetricConfig {
        channel_mode: ChannelMode::CenterChannel,
        ..MetricConfig::default()
    })
    .unwrap();
    let m = centre
        .evaluate_files(&dir.path().join("six.wav"), &dir.path().join("ref32.wav"))
        .unwrap();
    assert_eq!((m.mcd, m.mcd_dtw), (0.0, 0.0));
}

#[test]
fn batch_keeps_manifest_order_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = String::new();
    for i in 0..6 {
        let secs = 0.3 + 0.05 * i as f64;
        write(
            &dir.path().join(format!("g{i}.wav")),
            voiced(120.0 + 10.0 * i as f64, secs, i),
        );
        write(&dir.path().join(format!("r{i}.wav")), voiced(125.0, 0.4, 9));
        lines +=
            &format!("{{\"id\":\"p{i}\",\"generated\":\"g{i}.wav\",\"reference\":\"r{i}.wav\"}}\n");
    }
    lines += "{\"id\":\"missing\",\"generated\":\"nope.wav\",\"reference\":\"r0.wav\"}\n";
    let manifest = dir.path().join("pairs.jsonl");
    fs::write(&manifest, lines).unwrap();

    let pairs = load_pair_manifest(&manifest).unwrap();
    let cfg = MetricConfig::default();
    let one = evaluate_corpus(&pairs, &cfg, 1).unwrap();
    let four = evaluate_corpus(&pairs, &cfg, 4).unwrap();
    assert_eq!(one, four);
    let ids: Vec<&str> = one.rows.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["p0", "p1", "p2", "p3", "p4", "p5"]);
    assert_eq!(one.failures.len(), 1);
    assert_eq!(one.failures[0].id, "missing");
    assert_eq!((one.aggregate.n_pairs, one.aggregate.n_failed), (6, 1));
    let mean = one.rows.iter().map(|r| r.metrics.mcd_dtw).sum::<f64>() / 6.0;
    assert!((one.aggregate.mcd_dtw.unwrap() - mean).abs() < 1e-12);
}

#[test]
fn single_pair_corpus_aggregate_is_the_row() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("a.wav"), voiced(110.0, 0.4, 5));
    write(&dir.path().join("b.wav"), voiced(140.0, 0.5, 6));
    let manifest = dir.path().join("m.jsonl");
    fs::write(
        &manifest,
        "{\"id\":\"x\",\"generated\":\"a.wav\",\"reference\":\"b.wav\"}\n",
    )
    .unwrap();
    let r = evaluate_corpus(
        &load_pair_manifest(&manifest).unwrap(),
        &MetricConfig::default(),
        0,
    )
    .unwrap();
    let row = r.rows[0].metrics;
    assert_eq!(r.aggregate.mcd, Some(row.mcd));
    assert_eq!(r.aggregate.mcd_dtw_sl, Some(row.mcd_dtw_sl));
}
