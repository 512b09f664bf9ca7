use std::io::Write;
use std::path::Path;

use serde::Serialize;
use stylesim_core::graph::Provenance;
use stylesim_core::retrieval::{embed_all, retrieval_accuracy, top_k};
use stylesim_core::synth::{generate, SynthConfig};
use stylesim_core::{
    evaluate_estimation, export_graph, load_catalog, run_pipeline, split_dataset,
    train as train_model, Dataset, DatasetSplit, Engine, EngineConfig, Error, EvalOptions,
    ExportFormat, Partition, RawDataset, Result, Scope, SimilarityGraph, StyleModel,
};
use stylesim_server::{ArtifactPaths, ServerConfig};

use crate::config::{existing, require, RunConfig};

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|source| Error::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn dataset(c: &RunConfig) -> Result<Dataset> {
    let p = &c.paths;
    let dataset = load_catalog(
        existing(&p.products, "--products")?,
        existing(&p.images, "--images")?,
        existing(&p.votes, "--votes")?,
    )?;
    for w in &dataset.warnings {
        tracing::warn!("{w}");
    }
    Ok(dataset)
}

fn model(c: &RunConfig) -> Result<StyleModel> {
    StyleModel::load(existing(&c.paths.checkpoint, "--checkpoint")?)
}

pub fn synth(out: &Path, config: SynthConfig) -> Result<()> {
    let catalog = generate(&config)?;
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    catalog.dataset.write_jsonl(
        &out.join("products.jsonl"),
        &out.join("images.jsonl"),
        &out.join("votes.jsonl"),
    )?;
    tracing::info!(
        products = catalog.dataset.products.len(),
        images = catalog.dataset.images.len(),
        dir = %out.display(),
        "synthetic catalog written"
    );
    Ok(())
}

pub fn validate(c: &RunConfig) -> Result<()> {
    let p = &c.paths;
    let raw = RawDataset::read(
        existing(&p.products, "--products")?,
        existing(&p.images, "--images")?,
        existing(&p.votes, "--votes")?,
    )?;
    let report = raw.validate();
    print_json(&report)?;
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidDataset(format!(
            "{} validation errors",
            report.errors.len()
        )))
    }
}

pub fn split(c: &RunConfig) -> Result<()> {
    let dataset = dataset(c)?;
    let split = split_dataset(&dataset.images.ids(), c.split, c.seed)?;
    split.save(require(&c.paths.split, "--split")?)?;
    let [train, validation, test] = split.sizes();
    println!("train={train}\nvalidation={validation}\ntest={test}");
    Ok(())
}

pub fn train(c: &RunConfig) -> Result<()> {
    let dataset = dataset(c)?;
    let split = DatasetSplit::load(existing(&c.paths.split, "--split")?)?;
    let out = require(&c.paths.checkpoint, "--checkpoint")?;
    let model = StyleModel::init(dataset.images.feature_dim(), c.hidden_dim, c.seed)?;
    let (model, history) = train_model(model, &dataset, &split, &c.train)?;
    model.save(out)?;
    let history_path = out.with_extension("history.json");
    let mut text = serde_json::to_string_pretty(&history)?;
    text.push('\n');
    std::fs::write(&history_path, text).map_err(|source| Error::Io {
        path: history_path.clone(),
        source,
    })?;
    println!("epochs={}", history.epoch_loss.len());
    println!("first_loss={}", history.epoch_loss[0]);
    println!(
        "final_loss={}",
        history.epoch_loss[history.epoch_loss.len() - 1]
    );
    if let Some(Some(acc)) = history.validation_accuracy.last() {
        println!("validation_pairwise_accuracy={acc}");
    }
    println!("checksum={}", model.checksum());
    Ok(())
}

pub fn eval(c: &RunConfig) -> Result<()> {
    let dataset = dataset(c)?;
    let split = DatasetSplit::load(existing(&c.paths.split, "--split")?)?;
    let model = model(c)?;
    let test = split.partition(Partition::Test);
    let options = EvalOptions {
        exclude_ties: c.exclude_ties,
    };
    let est = evaluate_estimation(&model, &dataset, test, options)?;
    let store = embed_all(&model, &dataset)?;
    let ret = retrieval_accuracy(&store, &dataset, test, c.k)?;
    println!("estimation.accuracy={}", est.overall);
    for s in &est.per_style {
        match s.accuracy {
            Some(a) => println!("estimation.{}={a}", s.style),
            None => println!("estimation.{}=none", s.style),
        }
    }
    println!("estimation.evaluated={}", est.evaluated);
    println!("estimation.skipped_ties={}", est.skipped_ties);
    println!("retrieval.k={}", ret.k);
    println!("retrieval.accuracy={}", ret.accuracy);
    println!("retrieval.events={}", ret.events);
    Ok(())
}

pub fn embed(c: &RunConfig) -> Result<()> {
    let dataset = dataset(c)?;
    let model = model(c)?;
    let store = embed_all(&model, &dataset)?;
    store.save(require(&c.paths.embeddings, "--embeddings")?)?;
    for sku in &store.excluded_products {
        tracing::warn!(
            sku,
            "product has no target image; left out of product embeddings"
        );
    }
    println!("images={}", store.images.len());
    println!("products={}", store.products.len());
    println!("excluded_products={}", store.excluded_products.len());
    Ok(())
}

#[derive(Serialize)]
struct GraphSummary<'a> {
    nodes: usize,
    edges: usize,
    provenance: &'a Provenance,
}

pub fn graph_build(c: &RunConfig, scope: Scope) -> Result<()> {
    let dataset = dataset(c)?;
    let store =
        stylesim_core::EmbeddingStore::load(existing(&c.paths.embeddings, "--embeddings")?)?;
    let graph = run_pipeline(&store, &dataset, scope, &c.graph)?;
    graph.save(require(&c.paths.graph, "--graph")?)?;
    for (a, b) in &graph.provenance.duplicates {
        tracing::warn!(a, b, "duplicate embeddings; edge skipped");
    }
    print_json(&GraphSummary {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        provenance: &graph.provenance,
    })
}

pub fn graph_export(c: &RunConfig, format: &str, out: &Path) -> Result<()> {
    let format: ExportFormat = format.parse()?;
    let graph = SimilarityGraph::load(existing(&c.paths.graph, "--graph")?)?;
    export_graph(&graph, format, out)
}

pub fn recommend(c: &RunConfig, sku: Option<&str>, image: Option<&str>) -> Result<()> {
    let store =
        stylesim_core::EmbeddingStore::load(existing(&c.paths.embeddings, "--embeddings")?)?;
    let (seed, scope) = match (sku, image) {
        (Some(s), _) => (s, Scope::Products),
        (None, Some(i)) => (i, Scope::Images),
        (None, None) => return Err(Error::InvalidArgument("pass --sku or --image".into())),
    };
    print_json(&top_k(&store, seed, c.k, scope)?)
}

fn engine(c: &RunConfig) -> Result<Engine> {
    let graph = SimilarityGraph::load(existing(&c.paths.graph, "--graph")?)?;
    Engine::new(dataset(c)?, model(c)?, graph, engine_config(c))
}

fn engine_config(c: &RunConfig) -> EngineConfig {
    EngineConfig {
        graph: c.graph,
        default_k: c.k,
    }
}

pub fn score(
    c: &RunConfig,
    features: Option<Vec<f64>>,
    features_file: Option<&Path>,
) -> Result<()> {
    let features = match (features, features_file) {
        (Some(f), _) => f,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            serde_json::from_str(&text)?
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "pass --features or --features-file".into(),
            ))
        }
    };
    let engine = engine(c)?;
    print_json(&engine.score(&features, c.k)?)
}

pub fn gaps(c: &RunConfig) -> Result<()> {
    let graph = SimilarityGraph::load(existing(&c.paths.graph, "--graph")?)?;
    print_json(&stylesim_core::find_gaps(&graph))
}

pub fn serve(c: &RunConfig) -> Result<()> {
    let p = &c.paths;
    let paths = ArtifactPaths {
        products: existing(&p.products, "--products")?.to_path_buf(),
        images: existing(&p.images, "--images")?.to_path_buf(),
        votes: existing(&p.votes, "--votes")?.to_path_buf(),
        checkpoint: existing(&p.checkpoint, "--checkpoint")?.to_path_buf(),
        graph: p.graph.clone(),
    };
    let config = ServerConfig {
        bind: c.server.bind.clone(),
        port: c.server.port,
        admin_token: c.server.admin_token.clone(),
        paths: Some(paths),
        engine: engine_config(c),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|source| Error::Io {
        path: "<runtime>".into(),
        source,
    })?;
    runtime.block_on(stylesim_server::serve(config))
}
