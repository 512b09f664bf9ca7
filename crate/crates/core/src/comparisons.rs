//! Pairwise comparison labels derived from expert vote differentials,
//! and leakage-free dataset splits.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{write_jsonl, Style, VoteTable, NUM_STYLES};
use crate::error::{Error, Result};

/// Draws allowed per requested label before sampling gives up.
pub const REJECTION_BUDGET_PER_LABEL: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    /// The first image has at least `x` more votes in the style.
    Positive,
    /// The first image has at least `x` fewer votes in the style.
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign() as i8)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match i8::deserialize(d)? {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(serde::de::Error::custom(format!(
                "label must be 1 or -1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonLabel {
    #[serde(rename = "a")]
    pub image_a: String,
    #[serde(rename = "b")]
    pub image_b: String,
    pub style: Style,
    pub label: Label,
}

/// Label from a vote differential: `Some(Positive)` when `a - b >= x`,
/// `Some(Negative)` when `a - b <= -x`, `None` (discarded) otherwise.
pub fn label_from_counts(votes_a: u32, votes_b: u32, x: u32) -> Option<Label> {
    let diff = i64::from(votes_a) - i64::from(votes_b);
    let x = i64::from(x);
    if diff >= x {
        Some(Label::Positive)
    } else if diff <= -x {
        Some(Label::Negative)
    } else {
        None
    }
}

/// Comparison label for one style; `Ok(None)` means the pair is discarded.
pub fn generate_comparison(
    image_a: &str,
    image_b: &str,
    style: Style,
    votes: &VoteTable,
    x: u32,
) -> Result<Option<Label>> {
    if x < 1 {
        return Err(Error::InvalidArgument(
            "threshold x must be at least 1".into(),
        ));
    }
    let a = votes.vote_counts(image_a)?;
    let b = votes.vote_counts(image_b)?;
    Ok(label_from_counts(a[style.code()], b[style.code()], x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }

    /// Partition sizes by largest remainder: floor each quota, then hand
    /// the leftover units to the largest fractional parts (ties go to the
    /// earlier partition in train, validation, test order).
    pub fn sizes(&self, n: usize) -> Result<[usize; 3]> {
        let ratios = self.as_array();
        if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidArgument(
                "split ratios must be positive".into(),
            ));
        }
        if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("split ratios must sum to 1".into()));
        }
        let quotas = ratios.map(|r| r * n as f64);
        let mut sizes = quotas.map(|q| q.floor() as usize);
        let assigned: usize = sizes.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| {
            let (ri, rj) = (quotas[i] - quotas[i].floor(), quotas[j] - quotas[j].floor());
            rj.total_cmp(&ri).then(i.cmp(&j))
        });
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            sizes[i] += 1;
        }
        Ok(sizes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub ratios: SplitRatios,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl DatasetSplit {
    pub fn partition(&self, which: Partition) -> &[String] {
        match which {
            Partition::Train => &self.train,
            Partition::Validation => &self.validation,
            Partition::Test => &self.test,
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.validation.len(), self.test.len()]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<DatasetSplit> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Shuffles the ids with a seeded generator and cuts them into train,
/// validation and test partitions.
pub fn split_dataset(image_ids: &[String], ratios: SplitRatios, seed: u64) -> Result<DatasetSplit> {
    if image_ids.is_empty() {
        return Err(Error::Empty("image set"));
    }
    let unique: HashSet<&String> = image_ids.iter().collect();
    if unique.len() != image_ids.len() {
        return Err(Error::InvalidArgument("image ids must be unique".into()));
    }
    let [n_train, n_val, _] = ratios.sizes(image_ids.len())?;
    let mut ids = image_ids.to_vec();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = ids.split_off(n_train + n_val);
    let validation = ids.split_off(n_train);
    Ok(DatasetSplit {
        train: ids,
        validation,
        test,
        ratios,
        seed,
    })
}

/// Draws `n` labelled comparisons uniformly from pairs of images in one
/// partition. Each draw picks an ordered pair of distinct images and a
/// style uniformly; discarded draws are rejected.
pub fn sample_comparisons(
    partition: &[String],
    votes: &VoteTable,
    n: usize,
    x: u32,
    seed: u64,
) -> Result<Vec<ComparisonLabel>> {
    if x < 1 {
        return Err(Error::InvalidArgument(
            "threshold x must be at least 1".into(),
        ));
    }
    if partition.is_empty() {
        return Err(Error::Empty("partition"));
    }
    let counts = partition
        .iter()
        .map(|id| votes.vote_counts(id))
        .collect::<Result<Vec<_>>>()?;
    let budget = n.saturating_mul(REJECTION_BUDGET_PER_LABEL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut draws = 0;
    if partition.len() >= 2 {
        while out.len() < n && draws < budget {
            draws += 1;
            let a = rng.random_range(0..partition.len());
            let mut b = rng.random_range(0..partition.len() - 1);
            if b >= a {
                b += 1;
            }
            let style = Style::ALL[rng.random_range(0..NUM_STYLES)];
            let s = style.code();
            if let Some(label) = label_from_counts(counts[a][s], counts[b][s], x) {
                out.push(ComparisonLabel {
                    image_a: partition[a].clone(),
                    image_b: partition[b].clone(),
                    style,
                    label,
                });
            }
        }
    }
    if out.len() < n {
        return Err(Error::RejectionBudget {
            requested: n,
            accepted: out.len(),
            draws,
        });
    }
    Ok(out)
}

pub fn write_comparisons(path: &Path, labels: &[ComparisonLabel]) -> Result<()> {
    write_jsonl(path, labels.iter())
}
