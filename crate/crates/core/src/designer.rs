//! Designer-in-the-loop scoring: how a candidate design would connect
//! to the catalog, and where the catalog graph has gaps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{Dataset, Style, StyleAttributes, NUM_STYLES};
use crate::error::{Error, Result};
use crate::graph::{
    export_string, group_graph, most_connected, run_pipeline, ExportFormat, GraphConfig, GroupEdge,
    GroupGraph, GroupNode, MostConnected, SimilarityGraph, DUPLICATE_DISTANCE,
};
use crate::model::{argmax_style, style_probabilities, Embedding, StyleModel, EMBED_DIM};
use crate::retrieval::{embed_all, top_k, EmbeddingStore, RankedNeighbors, Scope};

/// Flag set on a report without any in-window connection.
pub const FLAG_NO_CONNECTIONS: &str = "no in-window connections";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    #[serde(flatten)]
    pub graph: GraphConfig,
    pub default_k: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            graph: GraphConfig::default(),
            default_k: 10,
        }
    }
}

/// Everything needed to answer scoring and graph queries. Immutable.
#[derive(Debug, Clone)]
pub struct Engine {
    pub dataset: Dataset,
    pub model: StyleModel,
    pub store: EmbeddingStore,
    pub graph: SimilarityGraph,
    pub group_graph: GroupGraph,
    pub config: EngineConfig,
}

impl Engine {
    /// Assembles an engine around an already filtered graph.
    pub fn new(
        dataset: Dataset,
        model: StyleModel,
        graph: SimilarityGraph,
        config: EngineConfig,
    ) -> Result<Engine> {
        if dataset.images.feature_dim() != model.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "model input vs. catalog features".into(),
                expected: model.input_dim(),
                found: dataset.images.feature_dim(),
            });
        }
        if config.graph.w_min.partial_cmp(&config.graph.w_max) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidArgument("w_min must be below w_max".into()));
        }
        let dangling: Vec<String> = graph
            .nodes()
            .filter(|(id, _)| !dataset.products.contains(id))
            .map(|(id, _)| id.to_string())
            .collect();
        if !dangling.is_empty() {
            return Err(Error::DanglingReference { ids: dangling });
        }
        let store = embed_all(&model, &dataset)?;
        let group_graph = group_graph(&graph);
        Ok(Engine {
            dataset,
            model,
            store,
            graph,
            group_graph,
            config,
        })
    }

    /// Embeds the catalog and runs the graph pipeline.
    pub fn build(dataset: Dataset, model: StyleModel, config: EngineConfig) -> Result<Engine> {
        let store = embed_all(&model, &dataset)?;
        let graph = run_pipeline(&store, &dataset, Scope::Products, &config.graph)?;
        Engine::new(dataset, model, graph, config)
    }

    pub fn model_checksum(&self) -> &str {
        &self.store.checkpoint_id
    }

    pub fn health(&self) -> Health {
        Health {
            status: "ok".to_string(),
            model_checksum: self.model_checksum().to_string(),
            products: self.dataset.products.len(),
            images: self.dataset.images.len(),
            graph_nodes: self.graph.node_count(),
            graph_edges: self.graph.edge_count(),
        }
    }

    pub fn styles(&self) -> Vec<StyleInfo> {
        Style::ALL
            .iter()
            .map(|&style| StyleInfo {
                style,
                code: style.code(),
                attributes: style.attributes(),
            })
            .collect()
    }

    /// Catalog groups with their product and graph node counts.
    pub fn groups(&self) -> Vec<GroupSummary> {
        let in_graph = self.graph.group_sizes();
        self.dataset
            .products
            .group_sizes()
            .into_iter()
            .map(|(group, products)| GroupSummary {
                graph_nodes: in_graph.get(group.as_str()).copied().unwrap_or(0),
                group,
                products,
            })
            .collect()
    }

    pub fn product(&self, sku: &str) -> Result<ProductView> {
        let product = self
            .dataset
            .products
            .get(sku)
            .ok_or_else(|| Error::UnknownSku(sku.to_string()))?;
        let (degree, weighted_degree) = match self.graph.contains_node(sku) {
            true => {
                let d = self.graph.degrees()[sku];
                (Some(d.0), Some(d.1))
            }
            false => (None, None),
        };
        let embedding = self.store.products.get(sku);
        Ok(ProductView {
            sku: product.sku.clone(),
            group: product.group.clone(),
            name: product.display_name.clone(),
            target_images: self
                .dataset
                .target_images(sku)
                .map(|i| i.image_id.clone())
                .collect(),
            estimated_style: embedding
                .map(|e| argmax_style(&scores_from_embedding(&self.model, e))),
            embedding: embedding.map(|e| e.to_vec()),
            in_graph: self.graph.contains_node(sku),
            degree,
            weighted_degree,
        })
    }

    pub fn neighbors(&self, sku: &str, k: usize) -> Result<RankedNeighbors> {
        if !self.dataset.products.contains(sku) {
            return Err(Error::UnknownSku(sku.to_string()));
        }
        top_k(&self.store, sku, k, Scope::Products)
    }

    pub fn score(&self, features: &[f64], k: usize) -> Result<DesignReport> {
        score_design(self, features, k)
    }

    /// Group graph with each group's most connected product.
    pub fn group_overview(&self) -> GroupOverview {
        let groups = self
            .group_graph
            .groups
            .iter()
            .map(|node| GroupOverviewEntry {
                node: node.clone(),
                most_connected: most_connected(&self.graph, &node.group).ok(),
            })
            .collect();
        GroupOverview {
            groups,
            edges: self.group_graph.edges.clone(),
        }
    }

    pub fn gaps(&self) -> GapReport {
        find_gaps(&self.graph)
    }

    pub fn export(&self, format: ExportFormat) -> Result<String> {
        export_string(&self.graph, format)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_checksum: String,
    pub products: usize,
    pub images: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StyleInfo {
    pub style: Style,
    pub code: usize,
    pub attributes: StyleAttributes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub products: usize,
    pub graph_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductView {
    pub sku: String,
    pub group: String,
    pub name: Option<String>,
    pub target_images: Vec<String>,
    pub estimated_style: Option<Style>,
    pub embedding: Option<Vec<f64>>,
    pub in_graph: bool,
    pub degree: Option<usize>,
    pub weighted_degree: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOverviewEntry {
    #[serde(flatten)]
    pub node: GroupNode,
    pub most_connected: Option<MostConnected>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOverview {
    pub groups: Vec<GroupOverviewEntry>,
    pub edges: Vec<GroupEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleProbability {
    pub style: Style,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignNeighbor {
    pub sku: String,
    pub group: String,
    pub distance: f64,
    /// `1 / distance`; `None` for a duplicate.
    pub weight: Option<f64>,
    pub in_window: bool,
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub style_probs: Vec<StyleProbability>,
    pub estimated_style: Style,
    pub embedding: Vec<f64>,
    pub top_neighbors: Vec<DesignNeighbor>,
    pub truncated: bool,
    /// group → summed in-window would-be edge weight
    pub group_connections: BTreeMap<String, f64>,
    /// Sum of all in-window would-be edge weights.
    pub similarity_score: f64,
    pub flags: Vec<String>,
}

/// Scores a candidate design given as a feature vector.
pub fn score_design(engine: &Engine, features: &[f64], k: usize) -> Result<DesignReport> {
    let embedding = engine.model.embed(features)?;
    score_embedding(engine, &embedding, k)
}

/// Scores a design given directly in embedding space.
///
/// The `k` nearest catalog products become would-be neighbours with edge
/// weight `1 / distance`; weights inside the engine's window add up per
/// group and in total. Zero-distance neighbours are duplicates and carry
/// no weight.
pub fn score_embedding(engine: &Engine, embedding: &Embedding, k: usize) -> Result<DesignReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if embedding.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("embedding is not finite".into()));
    }
    let scores = scores_from_embedding(&engine.model, embedding);
    let probs = style_probabilities(&scores);
    let (w_min, w_max) = (engine.config.graph.w_min, engine.config.graph.w_max);

    let ranked = engine.store.products.nearest(embedding, k, None);
    let mut neighbors = Vec::with_capacity(ranked.neighbors.len());
    let mut group_connections: BTreeMap<String, f64> = BTreeMap::new();
    let mut similarity_score = 0.0;
    let mut flags = Vec::new();
    for n in ranked.neighbors {
        let group = engine
            .dataset
            .products
            .get(&n.id)
            .map(|p| p.group.clone())
            .ok_or_else(|| {
                Error::Invariant(format!("store product {} missing from catalog", n.id))
            })?;
        let duplicate = n.distance < DUPLICATE_DISTANCE;
        let weight = (!duplicate).then(|| 1.0 / n.distance);
        let in_window = weight.is_some_and(|w| w_min <= w && w <= w_max);
        if duplicate {
            flags.push(format!("duplicate of {}", n.id));
        }
        if let (true, Some(w)) = (in_window, weight) {
            *group_connections.entry(group.clone()).or_insert(0.0) += w;
            similarity_score += w;
        }
        neighbors.push(DesignNeighbor {
            sku: n.id,
            group,
            distance: n.distance,
            weight,
            in_window,
            duplicate,
        });
    }
    if group_connections.is_empty() {
        flags.push(FLAG_NO_CONNECTIONS.to_string());
    }
    Ok(DesignReport {
        style_probs: Style::ALL
            .iter()
            .zip(probs)
            .map(|(&style, probability)| StyleProbability { style, probability })
            .collect(),
        estimated_style: argmax_style(&scores),
        embedding: embedding.to_vec(),
        top_neighbors: neighbors,
        truncated: ranked.truncated,
        group_connections,
        similarity_score,
        flags,
    })
}

fn scores_from_embedding(model: &StyleModel, embedding: &Embedding) -> [f64; NUM_STYLES] {
    let mut scores = [0.0; NUM_STYLES];
    scores.copy_from_slice(model.b3());
    let w3 = model.w3();
    for k in 0..EMBED_DIM {
        for (s, acc) in scores.iter_mut().enumerate() {
            *acc += embedding[k] * w3[k * NUM_STYLES + s];
        }
    }
    scores
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupGaps {
    pub group: String,
    pub node_count: usize,
    pub isolated_count: usize,
    pub isolated: Vec<String>,
    pub weighted_degree: DegreeSummary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub groups: Vec<GroupGaps>,
    /// Group pairs without any product edge between them.
    pub zero_weight_pairs: Vec<(String, String)>,
}

fn summarize(mut values: Vec<f64>) -> DegreeSummary {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let median = if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    };
    DegreeSummary {
        min: values[0],
        median,
        max: values[n - 1],
    }
}

/// Isolated products, disconnected group pairs and per-group degree
/// summaries.
pub fn find_gaps(graph: &SimilarityGraph) -> GapReport {
    let degrees = graph.degrees();
    let mut members: BTreeMap<&str, Vec<(&str, usize, f64)>> = BTreeMap::new();
    for (id, group) in graph.nodes() {
        let (count, weight) = degrees[id];
        members.entry(group).or_default().push((id, count, weight));
    }
    let groups = members
        .iter()
        .map(|(group, nodes)| {
            let isolated: Vec<String> = nodes
                .iter()
                .filter(|(_, c, _)| *c == 0)
                .map(|(id, _, _)| id.to_string())
                .collect();
            GroupGaps {
                group: group.to_string(),
                node_count: nodes.len(),
                isolated_count: isolated.len(),
                isolated,
                weighted_degree: summarize(nodes.iter().map(|(_, _, w)| *w).collect()),
            }
        })
        .collect();

    let gg = group_graph(graph);
    let names: Vec<&str> = members.keys().copied().collect();
    let mut zero_weight_pairs = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            if gg.weight(a, b).is_none() {
                zero_weight_pairs.push((a.to_string(), b.to_string()));
            }
        }
    }
    GapReport {
        groups,
        zero_weight_pairs,
    }
}
