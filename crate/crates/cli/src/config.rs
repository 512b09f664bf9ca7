use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stylesim_core::{Error, GraphConfig, Result, SplitRatios, TrainConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub products: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub votes: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServeConfig {
    pub bind: String,
    pub port: u16,
    pub admin_token: Option<String>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            bind: "127.0.0.1".to_string(),
            port: 8080,
            admin_token: None,
        }
    }
}

/// Settings shared by all subcommands. Loaded from a TOML file, then
/// overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Seeds the split, initialisation and training.
    pub seed: u64,
    pub k: usize,
    pub hidden_dim: usize,
    pub exclude_ties: bool,
    pub paths: PathsConfig,
    pub split: SplitRatios,
    pub train: TrainConfig,
    pub graph: GraphConfig,
    pub server: ServeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            k: 5,
            hidden_dim: 32,
            exclude_ties: false,
            paths: PathsConfig::default(),
            split: SplitRatios::default(),
            train: TrainConfig::default(),
            graph: GraphConfig::default(),
            server: ServeConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file; relative paths in it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut config.paths;
        for slot in [
            &mut p.products,
            &mut p.images,
            &mut p.votes,
            &mut p.split,
            &mut p.checkpoint,
            &mut p.embeddings,
            &mut p.graph,
        ] {
            if let Some(rel) = slot.as_ref().filter(|p| p.is_relative()) {
                *slot = Some(base.join(rel));
            }
        }
        Ok(config)
    }
}

/// Unwraps a path setting or names the flag that supplies it.
pub fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("missing {flag} (flag or config file)")))
}

/// Fails when an input file does not exist.
pub fn existing<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let p = require(path, flag)?;
    if !p.exists() {
        return Err(Error::Io {
            path: p.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{flag} input not found"),
            ),
        });
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seed = 7\n[paths]\nproducts = \"data/products.jsonl\"\ngraph = \"/abs/graph.json\"\n[train]\nepochs = 3\n",
        )
        .unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.batch_size, TrainConfig::default().batch_size);
        assert_eq!(
            c.paths.products,
            Some(dir.path().join("data/products.jsonl"))
        );
        assert_eq!(c.paths.graph, Some(PathBuf::from("/abs/graph.json")));
        assert_eq!(c.graph, GraphConfig::default());
    }

    #[test]
    fn bad_config_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = \"seven\"").unwrap();
        assert!(matches!(
            RunConfig::load(&path),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            RunConfig::load(&dir.path().join("nope.toml")),
            Err(Error::Io { .. })
        ));
    }
}
