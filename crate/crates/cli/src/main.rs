//! `stylesim`: file-staged pipeline from catalog to similarity graph.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stylesim_core::{Error, ErrorKind};

mod commands;
mod config;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "stylesim",
    version,
    about = "Furniture style embeddings and product similarity graphs"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags accepted by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// products.jsonl
    #[arg(long, global = true)]
    pub products: Option<PathBuf>,
    /// images.jsonl
    #[arg(long, global = true)]
    pub images: Option<PathBuf>,
    /// votes.jsonl
    #[arg(long, global = true)]
    pub votes: Option<PathBuf>,
    /// Dataset split (JSON)
    #[arg(long, global = true)]
    pub split: Option<PathBuf>,
    /// Model checkpoint (JSON)
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Image embeddings (JSON lines); product embeddings sit alongside
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Similarity graph (JSON)
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub wmin: Option<f64>,
    #[arg(long, global = true)]
    pub wmax: Option<f64>,
    #[arg(long, global = true)]
    pub min_group_size: Option<usize>,
    #[arg(long, global = true)]
    pub threshold_x: Option<u32>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    /// Hidden layer width
    #[arg(long, global = true)]
    pub hidden: Option<usize>,
    #[arg(long, global = true)]
    pub port: Option<u16>,
}

impl GlobalArgs {
    fn resolve(&self) -> stylesim_core::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let p = &mut c.paths;
        for (flag, slot) in [
            (&self.products, &mut p.products),
            (&self.images, &mut p.images),
            (&self.votes, &mut p.votes),
            (&self.split, &mut p.split),
            (&self.checkpoint, &mut p.checkpoint),
            (&self.embeddings, &mut p.embeddings),
            (&self.graph, &mut p.graph),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.wmin {
            c.graph.w_min = v;
        }
        if let Some(v) = self.wmax {
            c.graph.w_max = v;
        }
        if let Some(v) = self.min_group_size {
            c.graph.min_group_size = v;
        }
        if let Some(v) = self.threshold_x {
            c.train.threshold_x = v;
        }
        if let Some(v) = self.epochs {
            c.train.epochs = v;
        }
        if let Some(v) = self.lr {
            c.train.learning_rate = v;
        }
        if let Some(v) = self.hidden {
            c.hidden_dim = v;
        }
        if let Some(v) = self.port {
            c.server.port = v;
        }
        c.train.seed = c.seed;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Images,
    Products,
}

impl From<ScopeArg> for stylesim_core::Scope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Images => stylesim_core::Scope::Images,
            ScopeArg::Products => stylesim_core::Scope::Products,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic four-style catalog
    Synth {
        /// Output directory for products/images/votes.jsonl
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 400)]
        num_products: usize,
        #[arg(long, default_value_t = 3)]
        images_per_product: usize,
        #[arg(long, default_value_t = 16)]
        feature_dim: usize,
        #[arg(long, default_value_t = 10)]
        experts: usize,
        /// Probability an expert votes the true style
        #[arg(long, default_value_t = 0.8)]
        fidelity: f64,
    },
    /// Check catalog files and print a validation report
    Validate,
    /// Split image ids into train/validation/test
    Split,
    /// Train the style model on the train partition
    Train,
    /// Print style-estimation and retrieval accuracy on the test partition
    Eval,
    /// Embed every image and product
    Embed,
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Nearest neighbours of a product or image
    Recommend {
        #[arg(long, conflicts_with = "image", required_unless_present = "image")]
        sku: Option<String>,
        #[arg(long)]
        image: Option<String>,
    },
    /// Score a candidate design against the catalog
    Score {
        /// Comma-separated feature vector
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required_unless_present = "features_file"
        )]
        features: Option<Vec<f64>>,
        /// JSON array of features
        #[arg(long, conflicts_with = "features")]
        features_file: Option<PathBuf>,
    },
    /// Report isolated products and disconnected group pairs
    Gaps,
    /// Serve the HTTP API
    Serve,
}

#[derive(Debug, Subcommand)]
enum GraphCommand {
    /// Build and filter the similarity graph from embeddings
    Build {
        #[arg(long, value_enum, default_value_t = ScopeArg::Products)]
        scope: ScopeArg,
    },
    /// Write the graph as GraphML, GEXF or edge CSV
    Export {
        /// graphml, gexf or csv
        #[arg(long, default_value = "graphml")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Validation => 1,
        ErrorKind::Io => 2,
        ErrorKind::Internal => 3,
    }
}

fn run(cli: Cli) -> stylesim_core::Result<()> {
    let config = cli.global.resolve()?;
    match cli.command {
        Command::Synth {
            out,
            num_products,
            images_per_product,
            feature_dim,
            experts,
            fidelity,
        } => commands::synth(
            &out,
            stylesim_core::synth::SynthConfig {
                products: num_products,
                images_per_product,
                feature_dim,
                experts,
                fidelity,
                seed: config.seed,
                ..Default::default()
            },
        ),
        Command::Validate => commands::validate(&config),
        Command::Split => commands::split(&config),
        Command::Train => commands::train(&config),
        Command::Eval => commands::eval(&config),
        Command::Embed => commands::embed(&config),
        Command::Graph(GraphCommand::Build { scope }) => {
            commands::graph_build(&config, scope.into())
        }
        Command::Graph(GraphCommand::Export { format, out }) => {
            commands::graph_export(&config, &format, &out)
        }
        Command::Recommend { sku, image } => {
            commands::recommend(&config, sku.as_deref(), image.as_deref())
        }
        Command::Score {
            features,
            features_file,
        } => commands::score(&config, features, features_file.as_deref()),
        Command::Gaps => commands::gaps(&config),
        Command::Serve => commands::serve(&config),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
