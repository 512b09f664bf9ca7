//! Seeded synthetic catalogs with a known style per product.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::catalog::{Dataset, ImageRecord, Product, RawDataset, Style, Vote, NUM_STYLES};
use crate::error::{Error, Result};

const GROUP_NAMES: [&str; 8] = [
    "Accent Chairs",
    "Bar Stools",
    "Beds",
    "Coffee Tables",
    "Dressers",
    "End Tables",
    "Sofas",
    "Table Lamps",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub products: usize,
    pub images_per_product: usize,
    pub feature_dim: usize,
    pub experts: usize,
    /// Probability that an expert votes the true style.
    pub fidelity: f64,
    pub groups: usize,
    /// Norm of each style's centre in feature space.
    pub separation: f64,
    /// Standard deviation of a product around its style centre.
    pub product_spread: f64,
    /// Standard deviation of an image around its product.
    pub image_noise: f64,
    /// Probability that an image also lists a second product.
    pub co_listing: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            products: 400,
            images_per_product: 3,
            feature_dim: 16,
            experts: 10,
            fidelity: 0.8,
            groups: 8,
            separation: 3.0,
            product_spread: 0.5,
            image_noise: 0.3,
            co_listing: 0.1,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.products == 0
            || self.images_per_product == 0
            || self.feature_dim == 0
            || self.experts == 0
        {
            return bad("products, images per product, feature dim and experts must be positive");
        }
        if !(0.0..=1.0).contains(&self.fidelity) {
            return bad("fidelity must lie in [0, 1]");
        }
        if self.groups == 0 || self.groups > GROUP_NAMES.len() {
            return bad("groups must be between 1 and 8");
        }
        if !(0.0..=1.0).contains(&self.co_listing) {
            return bad("co-listing probability must lie in [0, 1]");
        }
        for v in [self.separation, self.product_spread, self.image_noise] {
            if !(v.is_finite() && v >= 0.0) {
                return bad("separation and spreads must be finite and non-negative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCatalog {
    pub dataset: Dataset,
    /// sku → true style
    pub product_styles: BTreeMap<String, Style>,
}

impl SynthCatalog {
    pub fn true_style(&self, image_id: &str) -> Option<Style> {
        let img = self.dataset.images.get(image_id)?;
        self.product_styles.get(img.target_sku()?).copied()
    }
}

/// Draws a catalog: products sit around one of four style centres,
/// images around their product, and each expert votes the product's
/// style with probability `fidelity`, else a uniformly random style.
pub fn generate(config: &SynthConfig) -> Result<SynthCatalog> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = config.feature_dim;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let centres: Vec<Vec<f64>> = (0..NUM_STYLES)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| std_normal.sample(&mut rng)).collect();
            let norm = v
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            v.into_iter()
                .map(|x| x / norm * config.separation)
                .collect()
        })
        .collect();

    let width = config.products.to_string().len().max(4);
    let mut raw = RawDataset::default();
    let mut product_styles = BTreeMap::new();
    let mut product_points = Vec::with_capacity(config.products);
    for i in 0..config.products {
        let sku = format!("P{:0width$}", i + 1);
        let style = Style::ALL[i % NUM_STYLES];
        let group = GROUP_NAMES[rng.random_range(0..config.groups)];
        let point: Vec<f64> = centres[style.code()]
            .iter()
            .map(|c| c + config.product_spread * std_normal.sample(&mut rng))
            .collect();
        raw.products.push(Product {
            sku: sku.clone(),
            group: group.to_string(),
            display_name: Some(format!("{} {}", style.as_str(), group.to_lowercase())),
        });
        product_styles.insert(sku, style);
        product_points.push(point);
    }

    let image_width = (config.products * config.images_per_product)
        .to_string()
        .len()
        .max(5);
    let mut next_image = 0usize;
    for (i, product) in raw.products.iter().enumerate() {
        let style = product_styles[&product.sku];
        for _ in 0..config.images_per_product {
            next_image += 1;
            let image_id = format!("img{next_image:0image_width$}");
            let features = product_points[i]
                .iter()
                .map(|p| p + config.image_noise * std_normal.sample(&mut rng))
                .collect();
            let mut skus = vec![product.sku.clone()];
            if config.products > 1 && rng.random_bool(config.co_listing) {
                let mut other = rng.random_range(0..config.products - 1);
                if other >= i {
                    other += 1;
                }
                skus.push(raw.products[other].sku.clone());
            }
            for e in 0..config.experts {
                let voted = if rng.random_bool(config.fidelity) {
                    style
                } else {
                    Style::ALL[rng.random_range(0..NUM_STYLES)]
                };
                raw.votes.push(Vote {
                    image_id: image_id.clone(),
                    expert_id: format!("expert{:02}", e + 1),
                    style: voted,
                });
            }
            raw.images.push(ImageRecord {
                image_id,
                skus,
                features,
            });
        }
    }

    Ok(SynthCatalog {
        dataset: Dataset::from_raw(raw)?,
        product_styles,
    })
}
