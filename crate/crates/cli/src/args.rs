use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "toruse",
    version,
    about = "Train, evaluate and benchmark knowledge graph embeddings on a torus (TorusE) and TransE"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it with its vocabulary, metrics and manifest
    Train(TrainArgs),
    /// Link-prediction evaluation (raw/filtered MRR, HITS@n)
    Eval(EvalArgs),
    /// Seconds per epoch of TorusE and TransE across dimensions
    Bench(BenchArgs),
    /// Print a model file's header and table statistics
    Inspect(InspectArgs),
    /// Generate the synthetic chain knowledge graph
    Toy(ToyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Directory with train.txt, valid.txt and test.txt
    #[arg(long, required_unless_present = "replay")]
    pub data_dir: Option<PathBuf>,

    /// Random seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Accepted for symmetry with `eval`; training is single-threaded and deterministic
    #[arg(long)]
    pub threads: Option<usize>,

    /// TOML file with defaults for any of the hyperparameter flags; explicit flags win
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Re-run the configuration recorded in a manifest.json
    #[arg(long, conflicts_with_all = ["data_dir", "config"])]
    pub replay: Option<PathBuf>,

    /// toruse or transe [default: toruse]
    #[arg(long)]
    pub model: Option<String>,

    /// TorusE: l1, l2, el2 [default: l1]. TransE: l1, l2sq [default: l2sq]
    #[arg(long)]
    pub score: Option<String>,

    /// Embedding dimension [default: 10000]
    #[arg(long)]
    pub dim: Option<usize>,

    /// Margin gamma; the WN18/FB15K grid is {2000,1000,500,200,100} [default: 2000]
    #[arg(long)]
    pub margin: Option<f64>,

    /// Learning rate alpha; the grid is {0.002,0.001,0.0005,0.0002,0.0001} [default: 0.0005]
    #[arg(long)]
    pub lr: Option<f64>,

    /// Number of epochs [default: 500]
    #[arg(long)]
    pub epochs: Option<usize>,

    /// Groups the training triples are split into per epoch [default: 100]
    #[arg(long)]
    pub groups: Option<usize>,

    /// Redraw negatives that happen to be training triples
    #[arg(long)]
    pub filter_negatives: bool,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data_dir: PathBuf,

    #[arg(long)]
    pub model_file: PathBuf,

    /// Vocabulary JSON to check against the dataset [default: vocab.json next to the model]
    #[arg(long)]
    pub vocab: Option<PathBuf>,

    /// Include the per-relation filtered MRR table
    #[arg(long)]
    pub per_relation: bool,

    /// Write the JSON report here and the text table next to it (.txt)
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Split to rank: test or valid
    #[arg(long, default_value = "test")]
    pub split: String,

    /// HITS@n cutoffs
    #[arg(long, value_delimiter = ',', default_value = "1,3,10")]
    pub hits: Vec<usize>,

    /// Accepted for flag compatibility; evaluation has no randomness
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads, 0 for all cores
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, required_unless_present = "toy", conflicts_with = "toy")]
    pub data_dir: Option<PathBuf>,

    /// Benchmark on the generated chain graph instead of a dataset directory
    #[arg(long)]
    pub toy: bool,

    #[arg(long, value_delimiter = ',', default_value = "128,1024,8192")]
    pub dims: Vec<usize>,

    #[arg(long, default_value_t = 3)]
    pub bench_epochs: usize,

    /// TorusE scoring function
    #[arg(long, default_value = "l1")]
    pub score: String,

    /// TransE scoring function
    #[arg(long, default_value = "l2sq")]
    pub transe_score: String,

    #[arg(long, default_value_t = 2000.0)]
    pub margin: f64,

    #[arg(long, default_value_t = 0.0005)]
    pub lr: f64,

    #[arg(long, default_value_t = 100)]
    pub groups: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Accepted for flag compatibility; timing runs are single-threaded
    #[arg(long)]
    pub threads: Option<usize>,

    /// CSV output path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model_file: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 200)]
    pub entities: usize,

    #[arg(long, default_value_t = 10)]
    pub chain_len: usize,

    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,
}
