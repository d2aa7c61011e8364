use std::collections::{BTreeMap, HashSet};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClipRecord, CorpusError};

const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.1,
            test: 0.3,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, CorpusError> {
        let r = Self { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|&p| !p.is_finite() || p <= 0.0) {
            return Err(CorpusError::BadRatios(format!(
                "every ratio must be positive, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > RATIO_TOL {
            return Err(CorpusError::BadRatios(format!(
                "ratios sum to {sum}, not 1"
            )));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes for `n` items: floors for the first two, remainder to test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The epsilon keeps exact products such as 0.6 * 10 from flooring to 5.
        let floor = |r: f64| ((r * n as f64) + RATIO_TOL).floor() as usize;
        let train = floor(self.train).min(n);
        let val = floor(self.val).min(n - train);
        (train, val, n - train - val)
    }
}

impl FromStr for SplitRatios {
    type Err = String;

    /// Parses `train,val,test`, e.g. `0.6,0.1,0.3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        let [train, val, test] = parts[..] else {
            return Err(format!(
                "expected three comma-separated ratios, got {}",
                parts.len()
            ));
        };
        SplitRatios::new(train, val, test).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub stratified: bool,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitAssignment {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Seeded random split of clip ids.
///
/// With `stratify_speaker` each speaker's clips are shuffled and cut separately
/// (speakers in lexicographic order, one shared RNG stream), so every speaker
/// appears in the splits in roughly the target proportions. Sizes then follow
/// the floor rule per speaker rather than over the whole corpus.
pub fn split_dataset(
    records: &[ClipRecord],
    ratios: SplitRatios,
    seed: u64,
    stratify_speaker: bool,
) -> Result<SplitAssignment, CorpusError> {
    ratios.validate()?;
    if records.len() < 3 {
        return Err(CorpusError::TooFewRecords(records.len()));
    }
    let mut seen = HashSet::new();
    let ids: Vec<String> = records.iter().map(ClipRecord::id).collect();
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(CorpusError::DuplicateId(dup.clone()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SplitAssignment {
        seed,
        stratified: stratify_speaker,
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    let mut cut = |mut group: Vec<String>, out: &mut SplitAssignment| {
        group.shuffle(&mut rng);
        let (n_train, n_val, _) = ratios.sizes(group.len());
        let mut it = group.into_iter();
        out.train.extend(it.by_ref().take(n_train));
        out.val.extend(it.by_ref().take(n_val));
        out.test.extend(it);
    };

    if stratify_speaker {
        let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (r, id) in records.iter().zip(ids) {
            groups.entry(r.speaker.as_str()).or_default().push(id);
        }
        for group in groups.into_values() {
            cut(group, &mut out);
        }
    } else {
        cut(ids, &mut out);
    }
    Ok(out)
}
