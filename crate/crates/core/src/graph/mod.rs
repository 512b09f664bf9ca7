//! Weighted undirected similarity graph over products (or images).
//!
//! Edge weight is `1 / distance` between embeddings, so stronger style
//! similarity means heavier edges. The analysis pipeline is
//! [`build_graph`] → [`remove_overlap_edges`] → [`filter_edges`] →
//! [`filter_small_groups`], followed by group-level aggregation.

mod export;

pub use export::{export_graph, export_string, read_graph, read_graph_file, ExportFormat};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{Dataset, ImageRecord};
use crate::error::{Error, Result};
use crate::model::Embedding;
use crate::retrieval::{distance, top_k, EmbeddingStore, Scope};

/// Pairs closer than this are treated as duplicate listings.
pub const DUPLICATE_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub w_min: f64,
    pub w_max: f64,
    pub min_group_size: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            w_min: 1.0,
            w_max: 10.0,
            min_group_size: 10,
        }
    }
}

/// How a graph was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scope: Scope,
    pub weight_window: Option<(f64, f64)>,
    pub min_group_size: Option<usize>,
    pub overlap_edges_removed: usize,
    /// Node pairs skipped at build time because their embeddings coincide.
    pub duplicates: Vec<(String, String)>,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            scope: Scope::Products,
            weight_window: None,
            min_group_size: None,
            overlap_edges_removed: 0,
            duplicates: Vec::new(),
        }
    }
}

type EdgeKey = (String, String);

fn edge_key(a: &str, b: &str) -> EdgeKey {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityGraph {
    /// node id → group
    nodes: BTreeMap<String, String>,
    /// (smaller id, larger id) → weight
    edges: BTreeMap<EdgeKey, f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub group: String,
    pub weighted_degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    provenance: Provenance,
}

impl SimilarityGraph {
    /// Builds a graph from explicit nodes and edges, checking that edges
    /// join distinct known nodes, appear once, and carry positive finite
    /// weights.
    pub fn from_parts(
        nodes: impl IntoIterator<Item = (String, String)>,
        edges: impl IntoIterator<Item = (String, String, f64)>,
    ) -> Result<SimilarityGraph> {
        let mut g = SimilarityGraph::default();
        for (id, group) in nodes {
            if g.nodes.insert(id.clone(), group).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate node {id}")));
            }
        }
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on {a}")));
            }
            for id in [&a, &b] {
                if !g.nodes.contains_key(id) {
                    return Err(Error::InvalidArgument(format!(
                        "edge references unknown node {id}"
                    )));
                }
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "edge {a}-{b} has weight {w}"
                )));
            }
            if g.edges.insert(edge_key(&a, &b), w).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate edge {a}-{b}")));
            }
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn group_of(&self, id: &str) -> Option<&str> {
        self.nodes.get(id).map(String::as_str)
    }

    /// Nodes sorted by id as `(id, group)`.
    pub fn nodes(&self) -> impl Iterator<Item = (&str, &str)> {
        self.nodes.iter().map(|(i, g)| (i.as_str(), g.as_str()))
    }

    /// Edges sorted by `(source, target)` with `source < target`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.edges
            .iter()
            .map(|((a, b), &w)| (a.as_str(), b.as_str(), w))
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        self.edges.get(&edge_key(a, b)).copied()
    }

    /// Member counts per group.
    pub fn group_sizes(&self) -> BTreeMap<&str, usize> {
        let mut sizes = BTreeMap::new();
        for g in self.nodes.values() {
            *sizes.entry(g.as_str()).or_insert(0) += 1;
        }
        sizes
    }

    /// `(edge count, sum of incident weights)` for every node.
    pub fn degrees(&self) -> BTreeMap<&str, (usize, f64)> {
        let mut d: BTreeMap<&str, (usize, f64)> =
            self.nodes.keys().map(|k| (k.as_str(), (0, 0.0))).collect();
        for ((a, b), &w) in &self.edges {
            for id in [a, b] {
                let entry = d.get_mut(id.as_str()).expect("edge endpoints are nodes");
                entry.0 += 1;
                entry.1 += w;
            }
        }
        d
    }

    pub fn weighted_degree(&self, id: &str) -> Option<f64> {
        if !self.nodes.contains_key(id) {
            return None;
        }
        Some(
            self.edges
                .iter()
                .filter(|((a, b), _)| a == id || b == id)
                .map(|(_, &w)| w)
                .sum(),
        )
    }

    pub fn node_records(&self) -> Vec<NodeRecord> {
        let degrees = self.degrees();
        self.nodes
            .iter()
            .map(|(id, group)| NodeRecord {
                id: id.clone(),
                group: group.clone(),
                weighted_degree: degrees[id.as_str()].1,
            })
            .collect()
    }

    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        self.edges()
            .map(|(a, b, w)| EdgeRecord {
                source: a.to_string(),
                target: b.to_string(),
                weight: w,
            })
            .collect()
    }

    pub fn same_structure(&self, other: &SimilarityGraph) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }

    fn retain_edges(&self, mut keep: impl FnMut(&str, &str, f64) -> bool) -> SimilarityGraph {
        SimilarityGraph {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .filter(|((a, b), &w)| keep(a, b, w))
                .map(|(k, &w)| (k.clone(), w))
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            nodes: self.node_records(),
            edges: self.edge_records(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_string_pretty(&file).expect("graph serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<SimilarityGraph> {
        let file: GraphFile = serde_json::from_str(text)?;
        let mut g = SimilarityGraph::from_parts(
            file.nodes.into_iter().map(|n| (n.id, n.group)),
            file.edges
                .into_iter()
                .map(|e| (e.source, e.target, e.weight)),
        )?;
        g.provenance = file.provenance;
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SimilarityGraph> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SimilarityGraph::from_json(&text)
    }
}

/// Complete graph over `(id, group, embedding)` entries with weight
/// `1 / distance`. Pairs closer than [`DUPLICATE_DISTANCE`] get no edge
/// and are logged in the provenance.
pub fn build_graph_from<'a, I>(entries: I, scope: Scope) -> Result<SimilarityGraph>
where
    I: IntoIterator<Item = (&'a str, &'a str, &'a Embedding)>,
{
    let entries: Vec<_> = entries.into_iter().collect();
    if entries.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a similarity graph needs at least 2 nodes, got {}",
            entries.len()
        )));
    }
    let mut g = SimilarityGraph::from_parts(
        entries
            .iter()
            .map(|(id, group, _)| (id.to_string(), group.to_string())),
        std::iter::empty(),
    )?;
    g.provenance.scope = scope;
    for (i, (a, _, ea)) in entries.iter().enumerate() {
        for (b, _, eb) in &entries[i + 1..] {
            let d = distance(ea, eb);
            if d < DUPLICATE_DISTANCE {
                let (x, y) = edge_key(a, b);
                tracing::debug!(a = %x, b = %y, "duplicate embeddings, skipping edge");
                g.provenance.duplicates.push((x, y));
                continue;
            }
            g.edges.insert(edge_key(a, b), 1.0 / d);
        }
    }
    g.provenance.duplicates.sort();
    Ok(g)
}

/// Similarity graph over products (aggregated embeddings) or images.
/// An image's group is the group of its target product.
pub fn build_graph(
    store: &EmbeddingStore,
    dataset: &Dataset,
    scope: Scope,
) -> Result<SimilarityGraph> {
    let table = store.table(scope);
    let mut entries = Vec::with_capacity(table.len());
    for (id, e) in table.iter() {
        let group = match scope {
            Scope::Products => dataset.products.get(id).map(|p| p.group.as_str()),
            Scope::Images => dataset.image_group(id),
        }
        .ok_or_else(|| match scope {
            Scope::Products => Error::UnknownSku(id.to_string()),
            Scope::Images => Error::UnknownImage(id.to_string()),
        })?;
        entries.push((id, group, e));
    }
    build_graph_from(entries, scope)
}

/// Node pairs that must not be linked because they share an image: for
/// products, any two skus listed on one image; for images, any two
/// images listing a common sku.
pub fn overlap_pairs(images: &[ImageRecord], scope: Scope) -> BTreeSet<EdgeKey> {
    let mut pairs = BTreeSet::new();
    match scope {
        Scope::Products => {
            for img in images {
                for (i, a) in img.skus.iter().enumerate() {
                    for b in &img.skus[i + 1..] {
                        if a != b {
                            pairs.insert(edge_key(a, b));
                        }
                    }
                }
            }
        }
        Scope::Images => {
            let mut by_sku: HashMap<&str, Vec<&str>> = HashMap::new();
            for img in images {
                let skus: BTreeSet<&str> = img.skus.iter().map(String::as_str).collect();
                for sku in skus {
                    by_sku.entry(sku).or_default().push(&img.image_id);
                }
            }
            for ids in by_sku.values() {
                for (i, a) in ids.iter().enumerate() {
                    for b in &ids[i + 1..] {
                        pairs.insert(edge_key(a, b));
                    }
                }
            }
        }
    }
    pairs
}

/// Drops edges between nodes that appear together in an image.
pub fn remove_overlap_edges(graph: &SimilarityGraph, images: &[ImageRecord]) -> SimilarityGraph {
    let pairs = overlap_pairs(images, graph.provenance.scope);
    let before = graph.edge_count();
    let mut out = graph.retain_edges(|a, b, _| !pairs.contains(&(a.to_string(), b.to_string())));
    out.provenance.overlap_edges_removed += before - out.edge_count();
    out
}

/// Keeps edges with `w_min <= weight <= w_max`. Nodes stay, even when
/// left isolated.
pub fn filter_edges(graph: &SimilarityGraph, w_min: f64, w_max: f64) -> Result<SimilarityGraph> {
    if w_min.partial_cmp(&w_max) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidArgument(format!(
            "weight window [{w_min}, {w_max}] is empty"
        )));
    }
    let mut out = graph.retain_edges(|_, _, w| w_min <= w && w <= w_max);
    out.provenance.weight_window = Some(match graph.provenance.weight_window {
        Some((lo, hi)) => (lo.max(w_min), hi.min(w_max)),
        None => (w_min, w_max),
    });
    Ok(out)
}

/// Removes every node whose group has fewer than `min_group_size`
/// members in the graph, with its edges. Applied once; removal does not
/// cascade.
pub fn filter_small_groups(graph: &SimilarityGraph, min_group_size: usize) -> SimilarityGraph {
    let sizes = graph.group_sizes();
    let nodes: BTreeMap<String, String> = graph
        .nodes
        .iter()
        .filter(|(_, g)| sizes[g.as_str()] >= min_group_size)
        .map(|(i, g)| (i.clone(), g.clone()))
        .collect();
    let edges = graph
        .edges
        .iter()
        .filter(|((a, b), _)| nodes.contains_key(a) && nodes.contains_key(b))
        .map(|(k, &w)| (k.clone(), w))
        .collect();
    let mut provenance = graph.provenance.clone();
    provenance.min_group_size = Some(
        provenance
            .min_group_size
            .map_or(min_group_size, |m| m.max(min_group_size)),
    );
    SimilarityGraph {
        nodes,
        edges,
        provenance,
    }
}

/// Runs the full build → overlap removal → weight window → group size pipeline.
pub fn run_pipeline(
    store: &EmbeddingStore,
    dataset: &Dataset,
    scope: Scope,
    config: &GraphConfig,
) -> Result<SimilarityGraph> {
    let g = build_graph(store, dataset, scope)?;
    let g = remove_overlap_edges(&g, dataset.images.as_slice());
    let g = filter_edges(&g, config.w_min, config.w_max)?;
    Ok(filter_small_groups(&g, config.min_group_size))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupNode {
    pub group: String,
    pub product_count: usize,
    /// Sum of member edge counts.
    pub degree_sum: usize,
    /// Sum of member weighted degrees.
    pub weighted_degree_sum: f64,
    /// Edges with both ends in the group.
    pub internal_edges: usize,
    pub internal_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEdge {
    pub source: String,
    pub target: String,
    pub edge_count: usize,
    /// Sum of product-edge weights between the two groups.
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupGraph {
    pub groups: Vec<GroupNode>,
    pub edges: Vec<GroupEdge>,
}

impl GroupGraph {
    pub fn group(&self, name: &str) -> Option<&GroupNode> {
        self.groups.iter().find(|g| g.group == name)
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        let (a, b) = edge_key(a, b);
        self.edges
            .iter()
            .find(|e| e.source == a && e.target == b)
            .map(|e| e.weight)
    }

    /// The group graph as a similarity graph with one node per group,
    /// for export.
    pub fn to_similarity_graph(&self) -> SimilarityGraph {
        SimilarityGraph::from_parts(
            self.groups
                .iter()
                .map(|g| (g.group.clone(), g.group.clone())),
            self.edges
                .iter()
                .map(|e| (e.source.clone(), e.target.clone(), e.weight)),
        )
        .expect("group graph is well formed")
    }
}

/// Aggregates the product graph by group.
pub fn group_graph(graph: &SimilarityGraph) -> GroupGraph {
    let mut groups: BTreeMap<&str, GroupNode> = BTreeMap::new();
    for (_, g) in graph.nodes() {
        let node = groups.entry(g).or_insert_with(|| GroupNode {
            group: g.to_string(),
            ..Default::default()
        });
        node.product_count += 1;
    }
    let mut edges: BTreeMap<(&str, &str), GroupEdge> = BTreeMap::new();
    for (a, b, w) in graph.edges() {
        let (ga, gb) = (graph.nodes[a].as_str(), graph.nodes[b].as_str());
        for g in [ga, gb] {
            let node = groups.get_mut(g).expect("group present");
            node.degree_sum += 1;
            node.weighted_degree_sum += w;
        }
        if ga == gb {
            let node = groups.get_mut(ga).expect("group present");
            node.internal_edges += 1;
            node.internal_weight += w;
        } else {
            let (x, y) = if ga < gb { (ga, gb) } else { (gb, ga) };
            let e = edges.entry((x, y)).or_insert_with(|| GroupEdge {
                source: x.to_string(),
                target: y.to_string(),
                edge_count: 0,
                weight: 0.0,
            });
            e.edge_count += 1;
            e.weight += w;
        }
    }
    GroupGraph {
        groups: groups.into_values().collect(),
        edges: edges.into_values().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MostConnected {
    pub sku: String,
    pub weighted_degree: f64,
    /// Every member of the group is isolated.
    pub zero_degree: bool,
}

/// Group member with the largest weighted degree; ties go to the
/// smallest id.
pub fn most_connected(graph: &SimilarityGraph, group: &str) -> Result<MostConnected> {
    let degrees = graph.degrees();
    let mut best: Option<(&str, f64)> = None;
    for (id, g) in graph.nodes() {
        if g != group {
            continue;
        }
        let w = degrees[id].1;
        // nodes iterate in ascending id, so only a strictly larger degree wins
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((id, w));
        }
    }
    let (sku, weighted_degree) = best.ok_or_else(|| Error::UnknownGroup(group.to_string()))?;
    Ok(MostConnected {
        sku: sku.to_string(),
        weighted_degree,
        zero_degree: weighted_degree == 0.0,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecommendationFrequency {
    pub k: usize,
    pub seeds: usize,
    /// Number of top-k lists each id appeared in.
    pub counts: BTreeMap<String, usize>,
    /// Seeds whose list fell short of `k`.
    pub truncated_seeds: usize,
}

impl RecommendationFrequency {
    /// The `n` most frequently recommended ids, count descending then id.
    pub fn top_n(&self, n: usize) -> Vec<(String, usize)> {
        let mut all: Vec<(String, usize)> =
            self.counts.iter().map(|(k, &v)| (k.clone(), v)).collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(n);
        all
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Counts how often each entry shows up in the unfiltered top-k lists of
/// the given seeds.
pub fn recommendation_frequency(
    store: &EmbeddingStore,
    ids: &[String],
    k: usize,
    scope: Scope,
) -> Result<RecommendationFrequency> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut freq = RecommendationFrequency {
        k,
        seeds: ids.len(),
        ..Default::default()
    };
    for seed in ids {
        let ranked = top_k(store, seed, k, scope)?;
        if ranked.truncated {
            freq.truncated_seeds += 1;
        }
        for n in ranked.neighbors {
            *freq.counts.entry(n.id).or_insert(0) += 1;
        }
    }
    Ok(freq)
}
