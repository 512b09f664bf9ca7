//! Furniture style similarity.
//!
//! Learns a style embedding from pairwise expert comparisons, retrieves
//! stylistically similar images and products, and builds filtered
//! product similarity graphs for catalog analysis.
//!
//! ```no_run
//! use stylesim_core::{synth, split_dataset, train, SplitRatios, StyleModel, TrainConfig};
//!
//! let catalog = synth::generate(&synth::SynthConfig::default()).unwrap();
//! let dataset = catalog.dataset;
//! let split = split_dataset(&dataset.images.ids(), SplitRatios::default(), 42).unwrap();
//! let model = StyleModel::init(dataset.images.feature_dim(), 32, 42).unwrap();
//! let (model, history) = train(model, &dataset, &split, &TrainConfig::default()).unwrap();
//! assert!(model.is_finite());
//! println!("final loss {:?}", history.epoch_loss.last());
//! ```

pub mod catalog;
pub mod comparisons;
pub mod designer;
pub mod error;
pub mod graph;
pub mod model;
pub mod retrieval;
pub mod synth;
pub mod training;

pub use catalog::{
    load_catalog, majority_of, Dataset, ImageRecord, ImageSet, Majority, Product, ProductCatalog,
    RawDataset, Style, ValidationIssue, ValidationReport, Vote, VoteCounts, VoteTable, NUM_STYLES,
};
pub use comparisons::{
    generate_comparison, label_from_counts, sample_comparisons, split_dataset, ComparisonLabel,
    DatasetSplit, Label, Partition, SplitRatios,
};
pub use designer::{
    find_gaps, score_design, score_embedding, DesignReport, Engine, EngineConfig, GapReport,
};
pub use error::{Error, ErrorKind, Result};
pub use graph::{
    build_graph, export_graph, export_string, filter_edges, filter_small_groups, group_graph,
    read_graph, read_graph_file, remove_overlap_edges, run_pipeline, ExportFormat, GraphConfig,
    GroupGraph, SimilarityGraph,
};
pub use model::{
    comparison_loss, estimate_style, loss_gradient, style_probabilities, Embedding, StyleModel,
    EMBED_DIM,
};
pub use retrieval::{
    embed_all, retrieval_accuracy, top_k, EmbeddingStore, EmbeddingTable, Neighbor,
    RankedNeighbors, Scope,
};
pub use training::{
    evaluate_estimation, train, EstimationReport, EvalOptions, TrainConfig, TrainHistory,
};
