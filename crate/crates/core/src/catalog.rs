//! Products, images, feature vectors and expert style votes.
//!
//! Three line-delimited JSON files make up a dataset:
//!
//! ```text
//! products.jsonl  {"sku": "A1", "group": "Bar Stools", "name": "optional"}
//! images.jsonl    {"image_id": "i1", "skus": ["A1", "B7"], "features": [0.1, ...]}
//! votes.jsonl     {"image_id": "i1", "expert_id": "e3", "style": "modern"}
//! ```
//!
//! The first sku of an image is its target product. Unknown keys are
//! ignored and reported as warnings.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Number of style categories.
pub const NUM_STYLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Modern,
    Traditional,
    Cottage,
    Coastal,
}

impl Style {
    pub const ALL: [Style; NUM_STYLES] = [
        Style::Modern,
        Style::Traditional,
        Style::Cottage,
        Style::Coastal,
    ];

    /// Stable integer code in `0..4`.
    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Style> {
        Style::ALL.get(code).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Style::Modern => "modern",
            Style::Traditional => "traditional",
            Style::Cottage => "cottage",
            Style::Coastal => "coastal",
        }
    }

    /// Descriptive attributes of the style. Carried as metadata only.
    pub fn attributes(self) -> StyleAttributes {
        match self {
            Style::Modern => StyleAttributes {
                fabric: "heavy texture, leathers, linens",
                color_scheme: "muted solids in neutrals, greys and blacks",
                furniture: "sleek, low to the ground, clean lines, straight legs on base",
                material: "mixed",
                flooring: "stripes or natural fiber rugs such as jute or sisal",
            },
            Style::Traditional => StyleAttributes {
                fabric: "damask or jacquard, velvet or silk, chintz or florals",
                color_scheme: "blue, dark red, hunter green and brown",
                furniture: "dark wood, gold accents, antique",
                material: "marble, gold, cherry or mahogany wood",
                flooring: "ornately patterned carpets",
            },
            Style::Cottage => StyleAttributes {
                fabric: "soft florals, linen, checks and gingham, toile",
                color_scheme: "muted blues, pinks, reds and greens, white, pale yellows, soft greens",
                furniture: "slightly distressed, vintage inspired, skirted sofas or chairs, feminine accents, wooden signs",
                material: "white washed or cherry wood, straw baskets and worn metals",
                flooring: "braided cotton, soft floral or checked rugs",
            },
            Style::Coastal => StyleAttributes {
                fabric: "linen, stripes, nautical",
                color_scheme: "blue, white, red, green",
                furniture: "whitewashed, distressed, beadboard accents, bamboo and rattan",
                material: "reclaimed or painted wood, seeded glass or beach glass, beach wood",
                flooring: "stripes or woven, seascape prints, sisal or jute",
            },
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Style::ALL
            .into_iter()
            .find(|style| style.as_str() == s)
            .ok_or_else(|| Error::UnknownStyle(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StyleAttributes {
    pub fabric: &'static str,
    pub color_scheme: &'static str,
    pub furniture: &'static str,
    pub material: &'static str,
    pub flooring: &'static str,
}

/// Per-style vote counts, indexed by [`Style::code`].
pub type VoteCounts = [u32; NUM_STYLES];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Product {
    pub sku: String,
    pub group: String,
    #[serde(rename = "name", default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub skus: Vec<String>,
    pub features: Vec<f64>,
}

impl ImageRecord {
    /// The product the image was taken for.
    pub fn target_sku(&self) -> Option<&str> {
        self.skus.first().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub image_id: String,
    pub expert_id: String,
    pub style: Style,
}

/// Products in insertion order with a sku index.
#[derive(Debug, Clone, Default)]
pub struct ProductCatalog {
    products: Vec<Product>,
    index: HashMap<String, usize>,
}

impl ProductCatalog {
    pub fn get(&self, sku: &str) -> Option<&Product> {
        self.index.get(sku).map(|&i| &self.products[i])
    }

    pub fn contains(&self, sku: &str) -> bool {
        self.index.contains_key(sku)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Product> {
        self.products.iter()
    }

    pub fn as_slice(&self) -> &[Product] {
        &self.products
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    /// Number of catalog products per group.
    pub fn group_sizes(&self) -> BTreeMap<String, usize> {
        let mut sizes = BTreeMap::new();
        for p in &self.products {
            *sizes.entry(p.group.clone()).or_insert(0) += 1;
        }
        sizes
    }
}

/// Images in insertion order; all feature vectors share one dimension.
#[derive(Debug, Clone, Default)]
pub struct ImageSet {
    images: Vec<ImageRecord>,
    index: HashMap<String, usize>,
    dim: usize,
}

impl ImageSet {
    pub fn get(&self, image_id: &str) -> Option<&ImageRecord> {
        self.index.get(image_id).map(|&i| &self.images[i])
    }

    pub fn contains(&self, image_id: &str) -> bool {
        self.index.contains_key(image_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ImageRecord> {
        self.images.iter()
    }

    pub fn as_slice(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn ids(&self) -> Vec<String> {
        self.images.iter().map(|i| i.image_id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Feature dimension, 0 for an empty set.
    pub fn feature_dim(&self) -> usize {
        self.dim
    }
}

/// Expert votes with per-image counts.
///
/// Every known image has a count entry, possibly all zero. Repeated
/// votes from one expert on one image count once (the first wins);
/// validation reports them as errors.
#[derive(Debug, Clone, Default)]
pub struct VoteTable {
    entries: Vec<Vote>,
    counts: HashMap<String, VoteCounts>,
}

impl VoteTable {
    pub fn new<I, S>(entries: Vec<Vote>, image_ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts: HashMap<String, VoteCounts> = image_ids
            .into_iter()
            .map(|id| (id.into(), [0; NUM_STYLES]))
            .collect();
        let mut seen = HashSet::new();
        for v in &entries {
            if !seen.insert((v.image_id.as_str(), v.expert_id.as_str())) {
                continue;
            }
            if let Some(c) = counts.get_mut(&v.image_id) {
                c[v.style.code()] += 1;
            }
        }
        VoteTable { entries, counts }
    }

    pub fn entries(&self) -> &[Vote] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn knows(&self, image_id: &str) -> bool {
        self.counts.contains_key(image_id)
    }

    /// Per-style vote counts of an image.
    pub fn vote_counts(&self, image_id: &str) -> Result<VoteCounts> {
        self.counts
            .get(image_id)
            .copied()
            .ok_or_else(|| Error::UnknownImage(image_id.to_string()))
    }

    pub fn majority_style(&self, image_id: &str) -> Result<Majority> {
        let counts = self.vote_counts(image_id)?;
        majority_of(&counts).ok_or_else(|| Error::NoLabel(image_id.to_string()))
    }
}

/// Majority style of an image. `tie` is set when another style had the
/// same maximal count; the lowest style code wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Majority {
    pub style: Style,
    pub tie: bool,
}

/// Strict-maximum style of a count vector, `None` when there are no votes.
pub fn majority_of(counts: &VoteCounts) -> Option<Majority> {
    let max = *counts.iter().max()?;
    if max == 0 {
        return None;
    }
    let winner = counts.iter().position(|&c| c == max)?;
    let tie = counts.iter().filter(|&&c| c == max).count() > 1;
    Some(Majority {
        style: Style::ALL[winner],
        tie,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    DuplicateSku {
        sku: String,
    },
    EmptyGroup {
        sku: String,
    },
    DuplicateImage {
        image_id: String,
    },
    EmptySkus {
        image_id: String,
    },
    DanglingSku {
        image_id: String,
        sku: String,
    },
    DanglingImage {
        image_id: String,
    },
    DimensionMismatch {
        image_id: String,
        expected: usize,
        found: usize,
    },
    EmptyFeatures {
        image_id: String,
    },
    NonFiniteFeature {
        image_id: String,
        index: usize,
    },
    DuplicateVote {
        image_id: String,
        expert_id: String,
    },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationIssue::*;
        match self {
            DuplicateSku { sku } => write!(f, "duplicate sku {sku}"),
            EmptyGroup { sku } => write!(f, "product {sku} has an empty group"),
            DuplicateImage { image_id } => write!(f, "duplicate image id {image_id}"),
            EmptySkus { image_id } => write!(f, "image {image_id} lists no skus"),
            DanglingSku { image_id, sku } => {
                write!(f, "image {image_id} references unknown sku {sku}")
            }
            DanglingImage { image_id } => write!(f, "vote references unknown image {image_id}"),
            DimensionMismatch {
                image_id,
                expected,
                found,
            } => write!(
                f,
                "image {image_id} has {found} features, expected {expected}"
            ),
            EmptyFeatures { image_id } => write!(f, "image {image_id} has no features"),
            NonFiniteFeature { image_id, index } => {
                write!(f, "image {image_id} feature {index} is not finite")
            }
            DuplicateVote {
                image_id,
                expert_id,
            } => write!(
                f,
                "expert {expert_id} voted more than once on image {image_id}"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationIssue>,
    pub warnings: Vec<String>,
    pub products_per_group: BTreeMap<String, usize>,
    /// Images per majority style (ties counted under the winning style).
    pub images_per_style: BTreeMap<Style, usize>,
    pub unlabeled_images: usize,
    pub tied_images: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Parsed but unchecked dataset records.
#[derive(Debug, Clone, Default)]
pub struct RawDataset {
    pub products: Vec<Product>,
    pub images: Vec<ImageRecord>,
    pub votes: Vec<Vote>,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct Lenient<T> {
    #[serde(flatten)]
    record: T,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

fn read_jsonl<T: DeserializeOwned>(path: &Path, warnings: &mut Vec<String>) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Lenient<T> = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        for key in parsed.extra.keys() {
            warnings.push(format!(
                "{}:{}: ignoring unknown key {key:?}",
                path.display(),
                i + 1
            ));
        }
        out.push(parsed.record);
    }
    Ok(out)
}

impl RawDataset {
    pub fn read(products: &Path, images: &Path, votes: &Path) -> Result<RawDataset> {
        let mut warnings = Vec::new();
        let products = read_jsonl(products, &mut warnings)?;
        let images = read_jsonl(images, &mut warnings)?;
        let votes = read_jsonl(votes, &mut warnings)?;
        Ok(RawDataset {
            products,
            images,
            votes,
            warnings,
        })
    }

    /// Checks every dataset invariant and collects all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport {
            warnings: self.warnings.clone(),
            ..Default::default()
        };
        let errors = &mut report.errors;

        let mut skus = HashSet::new();
        for p in &self.products {
            if !skus.insert(p.sku.as_str()) {
                errors.push(ValidationIssue::DuplicateSku { sku: p.sku.clone() });
            }
            if p.group.trim().is_empty() {
                errors.push(ValidationIssue::EmptyGroup { sku: p.sku.clone() });
            }
            *report
                .products_per_group
                .entry(p.group.clone())
                .or_insert(0) += 1;
        }

        let expected_dim = self.images.first().map(|i| i.features.len());
        let mut image_ids = HashSet::new();
        for img in &self.images {
            if !image_ids.insert(img.image_id.as_str()) {
                errors.push(ValidationIssue::DuplicateImage {
                    image_id: img.image_id.clone(),
                });
            }
            if img.skus.is_empty() {
                errors.push(ValidationIssue::EmptySkus {
                    image_id: img.image_id.clone(),
                });
            }
            for sku in &img.skus {
                if !skus.contains(sku.as_str()) {
                    errors.push(ValidationIssue::DanglingSku {
                        image_id: img.image_id.clone(),
                        sku: sku.clone(),
                    });
                }
            }
            if img.features.is_empty() {
                errors.push(ValidationIssue::EmptyFeatures {
                    image_id: img.image_id.clone(),
                });
            } else if let Some(expected) = expected_dim.filter(|&d| d != img.features.len()) {
                errors.push(ValidationIssue::DimensionMismatch {
                    image_id: img.image_id.clone(),
                    expected,
                    found: img.features.len(),
                });
            }
            if let Some(index) = img.features.iter().position(|x| !x.is_finite()) {
                errors.push(ValidationIssue::NonFiniteFeature {
                    image_id: img.image_id.clone(),
                    index,
                });
            }
        }

        let mut seen_votes = HashSet::new();
        let mut dangling_images = HashSet::new();
        for v in &self.votes {
            if !image_ids.contains(v.image_id.as_str()) {
                if dangling_images.insert(v.image_id.as_str()) {
                    errors.push(ValidationIssue::DanglingImage {
                        image_id: v.image_id.clone(),
                    });
                }
                continue;
            }
            if !seen_votes.insert((v.image_id.as_str(), v.expert_id.as_str())) {
                errors.push(ValidationIssue::DuplicateVote {
                    image_id: v.image_id.clone(),
                    expert_id: v.expert_id.clone(),
                });
            }
        }

        let table = VoteTable::new(
            self.votes.clone(),
            self.images.iter().map(|i| i.image_id.as_str()),
        );
        for img in &self.images {
            match table.majority_style(&img.image_id) {
                Ok(m) => {
                    *report.images_per_style.entry(m.style).or_insert(0) += 1;
                    if m.tie {
                        report.tied_images += 1;
                    }
                }
                Err(_) => report.unlabeled_images += 1,
            }
        }
        if report.unlabeled_images > 0 {
            report
                .warnings
                .push(format!("{} images have no votes", report.unlabeled_images));
        }

        let targeted: HashSet<&str> = self.images.iter().filter_map(|i| i.target_sku()).collect();
        let untargeted = self
            .products
            .iter()
            .filter(|p| !targeted.contains(p.sku.as_str()))
            .count();
        if untargeted > 0 {
            report.warnings.push(format!(
                "{untargeted} products are not the target of any image"
            ));
        }
        report
    }
}

/// A validated, cross-linked dataset. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub products: ProductCatalog,
    pub images: ImageSet,
    pub votes: VoteTable,
    pub warnings: Vec<String>,
}

impl Dataset {
    /// Validates raw records. Dangling references are reported first
    /// (all offending ids), then dimension mismatches, then duplicate
    /// votes, then anything else.
    pub fn from_raw(raw: RawDataset) -> Result<Dataset> {
        let report = raw.validate();
        if let Some(err) = first_error(&report) {
            return Err(err);
        }
        let index = raw
            .products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.sku.clone(), i))
            .collect();
        let products = ProductCatalog {
            products: raw.products,
            index,
        };
        let dim = raw.images.first().map_or(0, |i| i.features.len());
        let index = raw
            .images
            .iter()
            .enumerate()
            .map(|(i, img)| (img.image_id.clone(), i))
            .collect();
        let votes = VoteTable::new(raw.votes, raw.images.iter().map(|i| i.image_id.as_str()));
        let images = ImageSet {
            images: raw.images,
            index,
            dim,
        };
        Ok(Dataset {
            products,
            images,
            votes,
            warnings: report.warnings,
        })
    }

    pub fn into_raw(self) -> RawDataset {
        RawDataset {
            products: self.products.products,
            images: self.images.images,
            votes: self.votes.entries,
            warnings: self.warnings,
        }
    }

    /// Images whose target product is `sku`, in insertion order.
    pub fn target_images<'a>(&'a self, sku: &'a str) -> impl Iterator<Item = &'a ImageRecord> + 'a {
        self.images
            .iter()
            .filter(move |i| i.target_sku() == Some(sku))
    }

    /// Group of an image's target product.
    pub fn image_group(&self, image_id: &str) -> Option<&str> {
        let img = self.images.get(image_id)?;
        let sku = img.target_sku()?;
        self.products.get(sku).map(|p| p.group.as_str())
    }

    pub fn write_jsonl(&self, products: &Path, images: &Path, votes: &Path) -> Result<()> {
        write_jsonl(products, self.products.iter())?;
        write_jsonl(images, self.images.iter())?;
        write_jsonl(votes, self.votes.entries().iter())
    }
}

fn first_error(report: &ValidationReport) -> Option<Error> {
    let mut dangling: Vec<String> = Vec::new();
    for issue in &report.errors {
        let id = match issue {
            ValidationIssue::DanglingSku { sku, .. } => sku,
            ValidationIssue::DanglingImage { image_id } => image_id,
            _ => continue,
        };
        if !dangling.contains(id) {
            dangling.push(id.clone());
        }
    }
    if !dangling.is_empty() {
        return Some(Error::DanglingReference { ids: dangling });
    }
    for issue in &report.errors {
        if let ValidationIssue::DimensionMismatch {
            image_id,
            expected,
            found,
        } = issue
        {
            return Some(Error::DimensionMismatch {
                context: format!("features of image {image_id}"),
                expected: *expected,
                found: *found,
            });
        }
    }
    for issue in &report.errors {
        if let ValidationIssue::DuplicateVote {
            image_id,
            expert_id,
        } = issue
        {
            return Some(Error::DuplicateVote {
                image_id: image_id.clone(),
                expert_id: expert_id.clone(),
            });
        }
    }
    report
        .errors
        .first()
        .map(|issue| Error::InvalidDataset(issue.to_string()))
}

/// Reads and validates the three dataset files.
pub fn load_catalog(products: &Path, images: &Path, votes: &Path) -> Result<Dataset> {
    Dataset::from_raw(RawDataset::read(products, images, votes)?)
}

/// Writes one JSON object per line.
pub fn write_jsonl<'a, T, I>(path: &Path, records: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vote(image: &str, expert: &str, style: Style) -> Vote {
        Vote {
            image_id: image.into(),
            expert_id: expert.into(),
            style,
        }
    }

    fn raw() -> RawDataset {
        RawDataset {
            products: vec![
                Product {
                    sku: "A".into(),
                    group: "Bar Stools".into(),
                    display_name: None,
                },
                Product {
                    sku: "B".into(),
                    group: "End Tables".into(),
                    display_name: Some("Side table".into()),
                },
            ],
            images: vec![
                ImageRecord {
                    image_id: "i1".into(),
                    skus: vec!["A".into(), "B".into()],
                    features: vec![0.0, 1.0],
                },
                ImageRecord {
                    image_id: "i2".into(),
                    skus: vec!["B".into()],
                    features: vec![1.0, 0.0],
                },
            ],
            votes: vec![
                vote("i1", "e1", Style::Modern),
                vote("i1", "e2", Style::Modern),
                vote("i1", "e3", Style::Cottage),
                vote("i2", "e1", Style::Coastal),
            ],
            warnings: vec![],
        }
    }

    #[test]
    fn style_codes_are_stable() {
        let codes: Vec<_> = Style::ALL.iter().map(|s| s.code()).collect();
        assert_eq!(codes, vec![0, 1, 2, 3]);
        assert_eq!("cottage".parse::<Style>().unwrap(), Style::Cottage);
        assert!("rustic".parse::<Style>().is_err());
        assert_eq!(
            serde_json::to_string(&Style::Coastal).unwrap(),
            "\"coastal\""
        );
    }

    #[test]
    fn vote_counts_examples() {
        let ds = Dataset::from_raw(raw()).unwrap();
        assert_eq!(ds.votes.vote_counts("i1").unwrap(), [2, 0, 1, 0]);
        assert_eq!(ds.votes.vote_counts("i2").unwrap(), [0, 0, 0, 1]);
        assert!(matches!(
            ds.votes.vote_counts("nope"),
            Err(Error::UnknownImage(_))
        ));

        let ten: Vec<Vote> = (0..10)
            .map(|e| vote("x", &format!("e{e}"), Style::Traditional))
            .collect();
        let table = VoteTable::new(ten, ["x", "empty"]);
        assert_eq!(table.vote_counts("x").unwrap(), [0, 10, 0, 0]);
        assert_eq!(table.vote_counts("empty").unwrap(), [0, 0, 0, 0]);
    }

    #[test]
    fn majority_examples() {
        assert_eq!(
            majority_of(&[2, 0, 1, 0]),
            Some(Majority {
                style: Style::Modern,
                tie: false
            })
        );
        assert_eq!(
            majority_of(&[3, 3, 0, 0]),
            Some(Majority {
                style: Style::Modern,
                tie: true
            })
        );
        assert_eq!(
            majority_of(&[0, 1, 0, 4]),
            Some(Majority {
                style: Style::Coastal,
                tie: false
            })
        );
        assert_eq!(majority_of(&[0, 0, 0, 0]), None);
        let table = VoteTable::new(vec![], ["a"]);
        assert!(matches!(table.majority_style("a"), Err(Error::NoLabel(_))));
    }

    #[test]
    fn valid_dataset_has_no_errors() {
        let r = raw();
        let report = r.validate();
        assert!(report.is_valid(), "{:?}", report.errors);
        assert_eq!(report.products_per_group["Bar Stools"], 1);
        assert_eq!(report.images_per_style[&Style::Modern], 1);
        assert_eq!(report.images_per_style[&Style::Coastal], 1);
        let ds = Dataset::from_raw(r).unwrap();
        assert_eq!(
            (ds.products.len(), ds.images.len(), ds.votes.len()),
            (2, 2, 4)
        );
        assert_eq!(ds.images.feature_dim(), 2);
        assert_eq!(ds.image_group("i1"), Some("Bar Stools"));
        assert_eq!(ds.target_images("B").count(), 1);
    }

    #[test]
    fn each_violation_class_is_reported() {
        type Mutation = Box<dyn Fn(&mut RawDataset)>;
        let cases: Vec<(Mutation, &str)> = vec![
            (
                Box::new(|r| {
                    let old = std::mem::replace(&mut r.products[1].sku, "A".into());
                    for sku in r.images.iter_mut().flat_map(|i| i.skus.iter_mut()) {
                        if *sku == old {
                            *sku = "A".into();
                        }
                    }
                }),
                "duplicate_sku",
            ),
            (
                Box::new(|r| r.products[0].group = " ".into()),
                "empty_group",
            ),
            (
                Box::new(|r| {
                    r.images[1].image_id = "i1".into();
                    r.votes[3].image_id = "i1".into();
                    r.votes[3].expert_id = "e9".into();
                }),
                "duplicate_image",
            ),
            (Box::new(|r| r.images[1].skus.clear()), "empty_skus"),
            (
                Box::new(|r| r.images[1].skus.push("X9".into())),
                "dangling_sku",
            ),
            (
                Box::new(|r| r.votes[0].image_id = "ghost".into()),
                "dangling_image",
            ),
            (
                Box::new(|r| r.images[1].features.push(3.0)),
                "dimension_mismatch",
            ),
            (Box::new(|r| r.images[1].features.clear()), "empty_features"),
            (
                Box::new(|r| r.images[0].features[1] = f64::NAN),
                "non_finite_feature",
            ),
            (
                Box::new(|r| r.votes[1].expert_id = "e1".into()),
                "duplicate_vote",
            ),
        ];
        for (mutate, kind) in cases {
            let mut r = raw();
            mutate(&mut r);
            let report = r.validate();
            let kinds: Vec<String> = report
                .errors
                .iter()
                .map(|e| {
                    serde_json::to_value(e).unwrap()["kind"]
                        .as_str()
                        .unwrap()
                        .to_string()
                })
                .collect();
            assert_eq!(kinds, vec![kind.to_string()], "case {kind}");
            assert!(Dataset::from_raw(r).is_err());
        }
    }

    #[test]
    fn dangling_error_names_ids() {
        let mut r = raw();
        r.images[0].skus.push("X9".into());
        match Dataset::from_raw(r) {
            Err(Error::DanglingReference { ids }) => assert_eq!(ids, vec!["X9".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatched_dimensions_error() {
        let mut r = raw();
        r.images[0].features = vec![0.0; 8];
        r.images[1].features = vec![0.0; 16];
        match Dataset::from_raw(r) {
            Err(Error::DimensionMismatch {
                expected, found, ..
            }) => assert_eq!((expected, found), (8, 16)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
