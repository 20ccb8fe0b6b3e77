use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "papyrion", version, about = "Binarization, DIBCO scoring, papyrus augmentation and writer identification")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PAPYRION_THREADS")]
    pub threads: Option<usize>,

    /// Seed recorded in every report and used by every sampling step.
    #[arg(long, global = true, env = "PAPYRION_SEED", default_value_t = 0)]
    pub seed: u64,

    /// JSON object whose keys are expanded into this subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Binarize one image or every image of a directory.
    Binarize(BinarizeArgs),
    /// Search window / minN / glyph parameters against ground truth.
    GridSearch(GridSearchArgs),
    /// Score binarized images against ground truth.
    EvalBin(EvalBinArgs),
    /// Generate papyrus-textured training images.
    Augment(AugmentArgs),
    /// Detect keypoints and write PDSC descriptor files.
    Extract(ExtractArgs),
    /// Fit a k-means codebook on descriptor files.
    Codebook(CodebookArgs),
    /// Export per-patch cluster ids as CSV.
    SurrogateLabels(SurrogateArgs),
    /// VLAD-encode descriptor files.
    Encode(EncodeArgs),
    /// Leave-one-out writer retrieval.
    Retrieve(RetrieveArgs),
    /// Nearest-neighbour writer classification over sampled reference sets.
    Classify(ClassifyArgs),
    /// Correlate binarization scores with writer-identification scores.
    Correlate(CorrelateArgs),
    /// Execute an experiment manifest.
    Run(RunArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ParamArgs {
    /// Odd window side for local methods.
    #[arg(long)]
    pub window: Option<usize>,
    /// Sensitivity; defaults per method.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Dynamic range of the standard deviation (Sauvola).
    #[arg(long)]
    pub r: Option<f64>,
    /// Minimum high-contrast pixel count (Su).
    #[arg(long, alias = "minN")]
    pub min_n: Option<usize>,
    /// Background search radius (Gatos).
    #[arg(long)]
    pub glyph: Option<usize>,
    /// Light ink on a dark ground: binarize `255 - I`.
    #[arg(long)]
    pub invert: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct BinarizeArgs {
    /// Image file or directory.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file (for a file input) or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Positional form of `--input`.
    #[arg(value_name = "IN", required_unless_present = "input", conflicts_with = "input")]
    pub in_path: Option<PathBuf>,
    /// Positional form of `--out`.
    #[arg(value_name = "OUT", required_unless_present = "out", conflicts_with = "out")]
    pub out_path: Option<PathBuf>,
    #[arg(long, default_value = "otsu")]
    pub method: String,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Optional JSON report listing the written files.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GridSearchArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Comma-separated method names (default: all).
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, default_value = "fm")]
    pub objective: String,
    /// Window values: start:end:step (inclusive) or a comma list.
    #[arg(long, default_value = "37:147:10")]
    pub window_range: String,
    /// minN values (Su).
    #[arg(long, default_value = "37:147:10")]
    pub minn_range: String,
    /// Glyph values (Gatos).
    #[arg(long, default_value = "30:120:10")]
    pub glyph_range: String,
    /// Result file: the score table as CSV for a `.csv` path, otherwise the full JSON result.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the full table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalBinArgs {
    /// Directory of binarized predictions (ink = dark).
    #[arg(long, conflicts_with = "images")]
    pub pred: Option<PathBuf>,
    /// Directory of grayscale/colour images to binarize with `--method` first.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub gt: PathBuf,
    /// Method label recorded in the report (and used with `--images`).
    #[arg(long)]
    pub method: Option<String>,
    /// Subset label recorded in the report.
    #[arg(long)]
    pub subset: Option<String>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct AugmentArgs {
    /// Directory of training images to augment.
    #[arg(long)]
    pub sources: PathBuf,
    /// Directory of papyrus photographs.
    #[arg(long)]
    pub papyri: PathBuf,
    /// Optional directory of text masks named after the papyri.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub radius: usize,
    #[arg(long, default_value_t = 0.70)]
    pub alpha: f64,
    #[arg(long, default_value_t = 170)]
    pub bg_threshold: u8,
    /// Binarizer producing text masks when `--masks` is absent.
    #[arg(long, default_value = "sauvola")]
    pub mask_method: String,
    #[arg(long, default_value_t = 37)]
    pub mask_window: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub images: PathBuf,
    /// Directory of binarized images matched by stem; otherwise `--method` binarizes.
    #[arg(long)]
    pub binary: Option<PathBuf>,
    #[arg(long, default_value = "otsu")]
    pub method: String,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Minimum ink fraction of a patch.
    #[arg(long, default_value_t = 0.05)]
    pub min_fg: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct CodebookArgs {
    /// Directory of PDSC files.
    #[arg(long)]
    pub desc: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SurrogateArgs {
    #[arg(long)]
    pub desc: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// CSV with columns image,patch-index,cluster.
    #[arg(long)]
    pub out: PathBuf,
    /// Also save the fitted codebook.
    #[arg(long)]
    pub codebook_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct EncodeArgs {
    #[arg(long)]
    pub desc: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    /// L2-normalize each cluster block before the power map.
    #[arg(long)]
    pub intra_norm: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct RetrieveArgs {
    /// Directory of embedding JSON files.
    #[arg(long)]
    pub emb: PathBuf,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub emb: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub refs: usize,
    #[arg(long, default_value_t = 500)]
    pub combinations: usize,
    #[arg(long, value_enum, default_value_t = ScoreArg::Max)]
    pub writer_score: ScoreArg,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreArg {
    Max,
    Mean,
}

#[derive(Args, Debug, Serialize)]
pub struct CorrelateArgs {
    /// Glob matching eval-bin reports.
    #[arg(long)]
    pub bin_reports: String,
    /// Glob matching retrieve/classify reports.
    #[arg(long)]
    pub writer_reports: String,
    #[arg(long)]
    pub spearman: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub scatter: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct RunArgs {
    /// Experiment manifest (JSON).
    pub experiment: PathBuf,
    /// Where to write the run report.
    #[arg(long, default_value = "run_report.json")]
    pub report: PathBuf,
}
