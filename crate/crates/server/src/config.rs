use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stylesim_core::{
    load_catalog, Engine, EngineConfig, Error, Result, SimilarityGraph, StyleModel,
};

/// Files an engine is loaded from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub products: PathBuf,
    pub images: PathBuf,
    pub votes: PathBuf,
    pub checkpoint: PathBuf,
    /// Prebuilt graph; rebuilt from the checkpoint when absent.
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    /// Required in `x-admin-token` for `/admin/*`; admin routes are
    /// disabled when unset.
    pub admin_token: Option<String>,
    pub paths: Option<ArtifactPaths>,
    pub engine: EngineConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1".to_string(),
            port: 8080,
            admin_token: None,
            paths: None,
            engine: EngineConfig::default(),
        }
    }
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<ServerConfig> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("server config: {e}")))
    }

    pub fn load(path: &Path) -> Result<ServerConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ServerConfig::from_toml(&text)
    }
}

/// Loads catalog, checkpoint and graph, and embeds the catalog.
pub fn load_engine(paths: &ArtifactPaths, config: EngineConfig) -> Result<Engine> {
    let required = [
        &paths.products,
        &paths.images,
        &paths.votes,
        &paths.checkpoint,
    ];
    for p in required.into_iter().chain(paths.graph.as_ref()) {
        if !p.exists() {
            return Err(Error::Io {
                path: p.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "artifact not found"),
            });
        }
    }
    let dataset = load_catalog(&paths.products, &paths.images, &paths.votes)?;
    let model = StyleModel::load(&paths.checkpoint)?;
    match &paths.graph {
        Some(g) => Engine::new(dataset, model, SimilarityGraph::load(g)?, config),
        None => Engine::build(dataset, model, config),
    }
}
