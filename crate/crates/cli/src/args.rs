use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stylespace::sampler::Strategy;
use stylespace::synth::Lift;

#[derive(Debug, Parser)]
#[command(
    name = "stylespace",
    version,
    about = "Learn a cross-category style space and retrieve compatible items"
)]
pub struct Cli {
    /// Global seed; every stage derives its own seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic catalog with planted styles.
    Synth(SynthArgs),
    /// Drop unlabeled and duplicate items.
    Clean(CleanArgs),
    /// Stratified train/validation/test split of items.
    Split(SplitArgs),
    /// Sample labeled pairs for every split.
    Sample(SampleArgs),
    /// Train the projection model on the train pairs.
    Train(TrainArgs),
    /// ROC, AUC and distance histograms on one split.
    Eval(EvalArgs),
    /// Embed and cluster every category.
    Index(IndexArgs),
    /// Robust retrieval of one item from a target category.
    Retrieve(RetrieveArgs),
    /// Assemble an outfit around a query item.
    Outfit(OutfitArgs),
    /// Closest and farthest cluster pairs between two categories.
    Affinity(AffinityArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    #[arg(long)]
    pub items: PathBuf,
    #[arg(long)]
    pub edges: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output items file (JSON Lines).
    #[arg(long)]
    pub items: PathBuf,
    /// Output edges file (CSV).
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub categories: usize,
    #[arg(long, default_value_t = 400)]
    pub items_per_category: usize,
    #[arg(long, default_value_t = 2)]
    pub latent_dim: usize,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 0.05)]
    pub feature_noise: f64,
    #[arg(long, default_value_t = 0.1)]
    pub bandwidth: f64,
    #[arg(long, default_value_t = 10.0)]
    pub degree: f64,
    #[arg(long, default_value_t = 0.0)]
    pub label_noise: f64,
    #[arg(long, value_enum, default_value_t = LiftArg::Random)]
    pub lift: LiftArg,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum LiftArg {
    Random,
    Identity,
}

impl From<LiftArg> for Lift {
    fn from(l: LiftArg) -> Self {
        match l {
            LiftArg::Random => Lift::Random,
            LiftArg::Identity => Lift::Identity,
        }
    }
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
    /// Cleaned items output; defaults to overwriting `--items`.
    #[arg(long)]
    pub out_items: Option<PathBuf>,
    /// Cleaned edges output; defaults to overwriting `--edges`.
    #[arg(long)]
    pub out_edges: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long)]
    pub splits: PathBuf,
    /// Train:validation:test weights.
    #[arg(long, default_value = "80:1:19", value_parser = parse_ratios)]
    pub ratios: [f64; 3],
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long)]
    pub splits: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value = "strategic", value_parser = parse_strategy)]
    pub strategy: Strategy,
    #[arg(long)]
    pub holdout_category: Option<String>,
    /// Train negatives per positive.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub neg_ratio: u64,
    /// Validation/test negatives per positive.
    #[arg(long, default_value_t = 1.0)]
    pub test_neg_ratio: f64,
    /// Number of train positives.
    #[arg(long, default_value_t = 1000)]
    pub positives: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long)]
    pub pairs: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Style space dimension.
    #[arg(long, default_value_t = 256)]
    pub output_dim: usize,
    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Output report; `roc.csv` and `hist.csv` are written next to it.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitName::Test)]
    pub split: SplitName,
    #[arg(long, default_value_t = stylespace::eval::DEFAULT_BINS)]
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SplitName {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Output index file.
    #[arg(long)]
    pub index: PathBuf,
    /// Clusters per category, clamped to the category size.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = stylespace::retrieve::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Indexed item whose style vector is the query.
    #[arg(long)]
    pub query: String,
    #[arg(long)]
    pub target: String,
    /// Candidates taken around the nearest centroid.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
}

#[derive(Debug, Args)]
pub struct OutfitArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub query: String,
    /// Outfit category sets; the bundled defaults are used when absent.
    #[arg(long)]
    pub outfit_spec: Option<PathBuf>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
}

#[derive(Debug, Args)]
pub struct AffinityArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub cat_a: String,
    #[arg(long)]
    pub cat_b: String,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Defaults to the margin stored in the model.
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Number of train pairs checked.
    #[arg(long, default_value_t = 32)]
    pub limit: usize,
    /// Fail when the max relative error exceeds this.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected three colon-separated numbers, got `{s}`"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .trim()
            .parse()
            .map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(out)
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: stylespace::Error| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_parse() {
        assert_eq!(parse_ratios("80:1:19").unwrap(), [80.0, 1.0, 19.0]);
        assert!(parse_ratios("80:20").is_err());
        assert!(parse_ratios("a:b:c").is_err());
    }

    #[test]
    fn command_tree_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
