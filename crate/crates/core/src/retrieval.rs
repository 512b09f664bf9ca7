//! Embedding store and exact Euclidean k-nearest-neighbour retrieval.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{write_jsonl, Dataset};
use crate::error::{Error, Result};
use crate::model::{Embedding, StyleModel, EMBED_DIM};

/// Euclidean distance.
pub fn distance(a: &Embedding, b: &Embedding) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Images,
    Products,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: String,
    pub distance: f64,
}

/// Neighbours in ascending distance; equal distances ordered by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedNeighbors {
    pub neighbors: Vec<Neighbor>,
    /// Fewer than `k` entries were available.
    pub truncated: bool,
}

/// Ids and embeddings in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<String>,
    vectors: Vec<Embedding>,
    index: HashMap<String, usize>,
}

struct Candidate<'a> {
    distance: f64,
    id: &'a str,
}

impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then_with(|| self.id.cmp(other.id))
    }
}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

impl EmbeddingTable {
    pub fn new(entries: impl IntoIterator<Item = (String, Embedding)>) -> Result<EmbeddingTable> {
        let mut table = EmbeddingTable::default();
        for (id, v) in entries {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "embedding of {id} is not finite"
                )));
            }
            if table.index.insert(id.clone(), table.ids.len()).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate embedding id {id}"
                )));
            }
            table.ids.push(id);
            table.vectors.push(v);
        }
        Ok(table)
    }

    pub fn get(&self, id: &str) -> Option<&Embedding> {
        self.index.get(id).map(|&i| &self.vectors[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Embedding)> {
        self.ids.iter().map(String::as_str).zip(&self.vectors)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// The `k` entries closest to `query`, skipping `exclude`.
    pub fn nearest(&self, query: &Embedding, k: usize, exclude: Option<&str>) -> RankedNeighbors {
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut available = 0usize;
        for (id, v) in self.iter() {
            if Some(id) == exclude {
                continue;
            }
            available += 1;
            let c = Candidate {
                distance: distance(query, v),
                id,
            };
            if heap.len() < k {
                heap.push(c);
            } else if let Some(worst) = heap.peek() {
                if c < *worst {
                    heap.pop();
                    heap.push(c);
                }
            }
        }
        RankedNeighbors {
            neighbors: heap
                .into_sorted_vec()
                .into_iter()
                .map(|c| Neighbor {
                    id: c.id.to_string(),
                    distance: c.distance,
                })
                .collect(),
            truncated: available < k,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    /// Checksum of the model checkpoint that produced the embeddings.
    pub checkpoint_id: String,
    pub images: EmbeddingTable,
    pub products: EmbeddingTable,
    /// Catalog products without any target image, left out of `products`.
    pub excluded_products: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ImageEmbeddingLine {
    image_id: String,
    embedding: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProductEmbeddingLine {
    sku: String,
    embedding: Vec<f64>,
}

fn to_embedding(v: &[f64], context: &str) -> Result<Embedding> {
    v.try_into().map_err(|_| Error::DimensionMismatch {
        context: context.to_string(),
        expected: EMBED_DIM,
        found: v.len(),
    })
}

/// Mean of the embeddings, component-wise, summed in order.
pub fn mean_embedding<'a>(
    embeddings: impl IntoIterator<Item = &'a Embedding>,
) -> Option<Embedding> {
    let mut sum = [0.0; EMBED_DIM];
    let mut n = 0usize;
    for e in embeddings {
        for (s, x) in sum.iter_mut().zip(e) {
            *s += x;
        }
        n += 1;
    }
    (n > 0).then(|| sum.map(|s| s / n as f64))
}

/// Path of the product-level file written next to an image embeddings file.
pub fn product_embeddings_path(images_path: &Path) -> PathBuf {
    let stem = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".into());
    images_path.with_file_name(format!("{stem}.products.jsonl"))
}

/// Path of the metadata file written next to an image embeddings file.
pub fn embeddings_meta_path(images_path: &Path) -> PathBuf {
    let stem = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "embeddings".into());
    images_path.with_file_name(format!("{stem}.meta.json"))
}

#[derive(Serialize, Deserialize)]
struct StoreMeta {
    checkpoint_id: String,
    images: usize,
    products: usize,
    excluded_products: Vec<String>,
}

impl EmbeddingStore {
    pub fn table(&self, scope: Scope) -> &EmbeddingTable {
        match scope {
            Scope::Images => &self.images,
            Scope::Products => &self.products,
        }
    }

    /// Writes image embeddings to `path`, product embeddings to
    /// [`product_embeddings_path`] and the checkpoint id to
    /// [`embeddings_meta_path`].
    pub fn save(&self, path: &Path) -> Result<()> {
        let images: Vec<_> = self
            .images
            .iter()
            .map(|(id, e)| ImageEmbeddingLine {
                image_id: id.to_string(),
                embedding: e.to_vec(),
            })
            .collect();
        write_jsonl(path, images.iter())?;
        let products: Vec<_> = self
            .products
            .iter()
            .map(|(sku, e)| ProductEmbeddingLine {
                sku: sku.to_string(),
                embedding: e.to_vec(),
            })
            .collect();
        write_jsonl(&product_embeddings_path(path), products.iter())?;
        let meta = StoreMeta {
            checkpoint_id: self.checkpoint_id.clone(),
            images: self.images.len(),
            products: self.products.len(),
            excluded_products: self.excluded_products.clone(),
        };
        let meta_path = embeddings_meta_path(path);
        let mut text = serde_json::to_string_pretty(&meta)?;
        text.push('\n');
        std::fs::write(&meta_path, text).map_err(|e| Error::io(meta_path, e))
    }

    pub fn load(path: &Path) -> Result<EmbeddingStore> {
        fn lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let mut out = Vec::new();
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })?);
            }
            Ok(out)
        }
        let images = lines::<ImageEmbeddingLine>(path)?
            .into_iter()
            .map(|l| Ok((l.image_id, to_embedding(&l.embedding, "image embedding")?)))
            .collect::<Result<Vec<_>>>()?;
        let products = lines::<ProductEmbeddingLine>(&product_embeddings_path(path))?
            .into_iter()
            .map(|l| Ok((l.sku, to_embedding(&l.embedding, "product embedding")?)))
            .collect::<Result<Vec<_>>>()?;
        let meta_path = embeddings_meta_path(path);
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: StoreMeta = serde_json::from_str(&text)?;
        if meta.images != images.len() || meta.products != products.len() {
            return Err(Error::Malformed {
                format: "embeddings",
                message: format!(
                    "metadata lists {} images and {} products, files hold {} and {}",
                    meta.images,
                    meta.products,
                    images.len(),
                    products.len()
                ),
            });
        }
        Ok(EmbeddingStore {
            checkpoint_id: meta.checkpoint_id,
            images: EmbeddingTable::new(images)?,
            products: EmbeddingTable::new(products)?,
            excluded_products: meta.excluded_products,
        })
    }
}

/// Embeds every image, and every product as the mean embedding of the
/// images it is the target of.
pub fn embed_all(model: &StyleModel, dataset: &Dataset) -> Result<EmbeddingStore> {
    let images = dataset
        .images
        .iter()
        .map(|img| Ok((img.image_id.clone(), model.embed(&img.features)?)))
        .collect::<Result<Vec<_>>>()?;
    let images = EmbeddingTable::new(images)?;

    let mut by_target: HashMap<&str, Vec<&Embedding>> = HashMap::new();
    for img in dataset.images.iter() {
        if let (Some(sku), Some(e)) = (img.target_sku(), images.get(&img.image_id)) {
            by_target.entry(sku).or_default().push(e);
        }
    }
    let mut products = Vec::new();
    let mut excluded = Vec::new();
    for p in dataset.products.iter() {
        match by_target
            .get(p.sku.as_str())
            .and_then(|es| mean_embedding(es.iter().copied()))
        {
            Some(mean) => products.push((p.sku.clone(), mean)),
            None => excluded.push(p.sku.clone()),
        }
    }
    Ok(EmbeddingStore {
        checkpoint_id: model.checksum(),
        images,
        products: EmbeddingTable::new(products)?,
        excluded_products: excluded,
    })
}

/// The `k` nearest entries to a stored seed, excluding the seed itself.
pub fn top_k(
    store: &EmbeddingStore,
    seed_id: &str,
    k: usize,
    scope: Scope,
) -> Result<RankedNeighbors> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let table = store.table(scope);
    let seed = table.get(seed_id).ok_or_else(|| match scope {
        Scope::Images => Error::UnknownImage(seed_id.to_string()),
        Scope::Products => Error::UnknownSku(seed_id.to_string()),
    })?;
    Ok(table.nearest(seed, k, Some(seed_id)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub accuracy: f64,
    pub k: usize,
    pub seeds: usize,
    /// Retrieved images with a majority style.
    pub events: usize,
    pub matches: usize,
    /// Retrieved images without votes, left out of `events`.
    pub unlabeled: usize,
}

/// Image-level retrieval accuracy.
///
/// For each test seed the `k` nearest images in the whole store are
/// retrieved; every retrieved image is one event and counts as a match
/// when its majority style equals the seed's. The result is matches over
/// events (per retrieved image, not a per-seed vote).
pub fn retrieval_accuracy(
    store: &EmbeddingStore,
    dataset: &Dataset,
    test_ids: &[String],
    k: usize,
) -> Result<RetrievalReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if test_ids.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut events = 0;
    let mut matches = 0;
    let mut unlabeled = 0;
    for seed in test_ids {
        let truth = dataset.votes.majority_style(seed)?.style;
        for n in top_k(store, seed, k, Scope::Images)?.neighbors {
            match dataset.votes.majority_style(&n.id) {
                Ok(m) => {
                    events += 1;
                    if m.style == truth {
                        matches += 1;
                    }
                }
                Err(Error::NoLabel(_)) => unlabeled += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if events == 0 {
        return Err(Error::Empty("retrieval events"));
    }
    Ok(RetrievalReport {
        accuracy: matches as f64 / events as f64,
        k,
        seeds: test_ids.len(),
        events,
        matches,
        unlabeled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(values: &[f64]) -> Embedding {
        let mut out = [0.0; EMBED_DIM];
        out[..values.len()].copy_from_slice(values);
        out
    }

    fn store(entries: Vec<(&str, Embedding)>) -> EmbeddingStore {
        EmbeddingStore {
            images: EmbeddingTable::new(entries.into_iter().map(|(i, v)| (i.to_string(), v)))
                .unwrap(),
            ..Default::default()
        }
    }

    #[test]
    fn distance_examples() {
        let a = e(&[1.0, 2.0]);
        assert_eq!(distance(&a, &a), 0.0);
        assert_eq!(distance(&e(&[3.0, 4.0]), &e(&[])), 5.0);
        let b = e(&[-0.5, 7.25, 3.0]);
        assert_eq!(distance(&a, &b), distance(&b, &a));
    }

    #[test]
    fn top_k_examples() {
        let s = store(vec![
            ("seed", e(&[])),
            ("c", e(&[3.0])),
            ("a", e(&[1.0])),
            ("b", e(&[2.0])),
        ]);
        let r = top_k(&s, "seed", 2, Scope::Images).unwrap();
        let ids: Vec<_> = r.neighbors.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
        assert!(!r.truncated);

        let r = top_k(&s, "seed", 10, Scope::Images).unwrap();
        assert_eq!(r.neighbors.len(), 3);
        assert!(r.truncated);

        let s = store(vec![
            ("seed", e(&[1.0])),
            ("far", e(&[5.0])),
            ("dup", e(&[1.0])),
        ]);
        let r = top_k(&s, "seed", 1, Scope::Images).unwrap();
        assert_eq!(r.neighbors[0].id, "dup");
        assert_eq!(r.neighbors[0].distance, 0.0);

        assert!(top_k(&s, "seed", 0, Scope::Images).is_err());
        assert!(matches!(
            top_k(&s, "nope", 1, Scope::Images),
            Err(Error::UnknownImage(_))
        ));
        assert!(matches!(
            top_k(&s, "nope", 1, Scope::Products),
            Err(Error::UnknownSku(_))
        ));
    }

    #[test]
    fn ties_break_by_id() {
        let s = store(vec![
            ("seed", e(&[])),
            ("z", e(&[1.0])),
            ("m", e(&[0.0, 1.0])),
            ("a", e(&[0.0, 0.0, -1.0])),
        ]);
        let r = top_k(&s, "seed", 3, Scope::Images).unwrap();
        let ids: Vec<_> = r.neighbors.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "m", "z"]);
    }

    #[test]
    fn means() {
        let a = e(&[1.0, -2.0, 0.5]);
        assert_eq!(mean_embedding([&a]), Some(a));
        let neg = a.map(|x| -x);
        assert_eq!(mean_embedding([&a, &neg]), Some([0.0; EMBED_DIM]));
        assert_eq!(mean_embedding(std::iter::empty()), None);
    }

    #[test]
    fn table_rejects_duplicates_and_nan() {
        assert!(EmbeddingTable::new(vec![("a".into(), e(&[])), ("a".into(), e(&[1.0]))]).is_err());
        assert!(EmbeddingTable::new(vec![("a".into(), e(&[f64::NAN]))]).is_err());
    }

    #[test]
    fn product_path_naming() {
        assert_eq!(
            product_embeddings_path(Path::new("/tmp/out/embeddings.jsonl")),
            PathBuf::from("/tmp/out/embeddings.products.jsonl")
        );
        assert_eq!(
            embeddings_meta_path(Path::new("/tmp/out/embeddings.jsonl")),
            PathBuf::from("/tmp/out/embeddings.meta.json")
        );
    }

    #[test]
    fn store_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let original = EmbeddingStore {
            checkpoint_id: "abc".into(),
            images: EmbeddingTable::new(vec![
                ("i1".into(), e(&[0.1, 1.0 / 3.0])),
                ("i2".into(), e(&[-7e-300])),
            ])
            .unwrap(),
            products: EmbeddingTable::new(vec![("p1".into(), e(&[2.0 / 3.0]))]).unwrap(),
            excluded_products: vec!["p2".into()],
        };
        original.save(&path).unwrap();
        assert_eq!(EmbeddingStore::load(&path).unwrap(), original);

        std::fs::write(dir.path().join("emb.products.jsonl"), "").unwrap();
        assert!(matches!(
            EmbeddingStore::load(&path),
            Err(Error::Malformed { .. })
        ));
        assert!(matches!(
            EmbeddingStore::load(&dir.path().join("missing.jsonl")),
            Err(Error::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn metric_axioms(
            a in prop::array::uniform16(-100.0f64..100.0),
            b in prop::array::uniform16(-100.0f64..100.0),
            c in prop::array::uniform16(-100.0f64..100.0),
        ) {
            prop_assert_eq!(distance(&a, &a), 0.0);
            prop_assert_eq!(distance(&a, &b), distance(&b, &a));
            prop_assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c) + 1e-9);
        }

        #[test]
        fn order_independent(points in prop::collection::vec(prop::array::uniform2(0i8..4), 2..40), k in 1usize..10, rot in 0usize..40) {
            let entries: Vec<(String, Embedding)> = points
                .iter()
                .enumerate()
                .map(|(i, p)| (format!("id{i:02}"), e(&[f64::from(p[0]), f64::from(p[1])])))
                .collect();
            let mut rotated = entries.clone();
            rotated.rotate_left(rot % entries.len());
            rotated.reverse();
            let s1 = EmbeddingStore { images: EmbeddingTable::new(entries).unwrap(), ..Default::default() };
            let s2 = EmbeddingStore { images: EmbeddingTable::new(rotated).unwrap(), ..Default::default() };
            prop_assert_eq!(
                top_k(&s1, "id00", k, Scope::Images).unwrap(),
                top_k(&s2, "id00", k, Scope::Images).unwrap()
            );
        }
    }
}
