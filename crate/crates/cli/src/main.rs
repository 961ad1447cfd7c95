mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

/// Command-line errors that are the caller's fault; they exit with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "multishell", version, about = "Multilayer nanosphere scattering: data, surrogate training and inverse design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an oracle dataset of random stacks and their spectra.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Train a surrogate on a dataset.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Train both architectures per layer count and tabulate their test errors.
    #[command(args_override_self = true)]
    Compare(CompareArgs),
    /// Find a stack whose spectrum matches a target.
    #[command(args_override_self = true)]
    Design(DesignArgs),
    /// Evaluate a model on a dataset split.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// File of `key: value` lines supplying defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = 400.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 800.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub host_index: f64,
    /// Extra material table file (may be repeated); overrides built-ins of the same name.
    #[arg(long = "material")]
    pub material_files: Vec<PathBuf>,
    /// Core material and the one it alternates with.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = ["SiO2".to_string(), "TiO2".to_string()])]
    pub materials: Vec<String>,
}

#[derive(Args, Clone)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.90)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0.05)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0.05)]
    pub test_frac: f64,
    /// Shuffle seed for the split (default: --seed).
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Args, Clone)]
pub struct TrainingArgs {
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch_size: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Weight of the first spectrum half in the two-channel loss.
    #[arg(long, default_value_t = 0.6)]
    pub m: f64,
    #[arg(long)]
    pub hidden_layers: Option<usize>,
    #[arg(long)]
    pub hidden_width: Option<usize>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub layers: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long, default_value_t = 30.0)]
    pub min_thickness: f64,
    #[arg(long, default_value_t = 70.0)]
    pub max_thickness: f64,
    /// `nm2` or `efficiency`.
    #[arg(long, default_value = "nm2")]
    pub unit: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: PathBuf,
    /// `tcnn` or `fcnn`.
    #[arg(long, default_value = "tcnn")]
    pub arch: String,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch CSV (default: `<out stem>.history.csv`).
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [2u64, 3, 4], value_parser = clap::value_parser!(u64).range(1..))]
    pub layers: Vec<u64>,
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Also save each generated dataset here.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("target").required(true).args(["target_stack", "target_data", "target_csv"])))]
pub struct DesignArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Thicknesses (nm) whose oracle spectrum is the target.
    #[arg(long, value_delimiter = ',')]
    pub target_stack: Option<Vec<f64>>,
    /// Dataset supplying the target record.
    #[arg(long)]
    pub target_data: Option<PathBuf>,
    #[arg(long, default_value_t = 0, requires = "target_data")]
    pub target_record: usize,
    /// CSV with a header row and (wavelength, value) rows on the model grid.
    #[arg(long)]
    pub target_csv: Option<PathBuf>,
    #[arg(long = "material")]
    pub material_files: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub population: usize,
    #[arg(long, default_value_t = 1e7)]
    pub t_value: f64,
    #[arg(long, default_value_t = 200)]
    pub max_generations: usize,
    #[arg(long, default_value_t = 90)]
    pub selection_cap: usize,
    #[arg(long, default_value_t = 0.7)]
    pub crossover_fraction: f64,
    /// `adaptive`, `literal` or `fixed:N`.
    #[arg(long, default_value = "adaptive")]
    pub ga_selection: String,
    #[arg(long)]
    pub no_elitism: bool,
    #[arg(long, default_value_t = 500)]
    pub fine_tune_steps: usize,
    #[arg(long, default_value_t = 0.5)]
    pub fine_tune_lr: f64,
    /// Report path; overlay CSV, GA history CSV and SVG are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// `all`, `train`, `val` or `test`.
    #[arg(long, default_value = "test")]
    pub split: String,
    #[command(flatten)]
    pub split_fractions: SplitArgs,
    #[arg(long = "material")]
    pub material_files: Vec<PathBuf>,
    /// Write a prediction-vs-oracle overlay CSV (and SVG) for one record of the split.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub record: usize,
    /// Summary text file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let common = match &cli.command {
        Command::Generate(a) => &a.common,
        Command::Train(a) => &a.common,
        Command::Compare(a) => &a.common,
        Command::Design(a) => &a.common,
        Command::Eval(a) => &a.common,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Train(a) => commands::train(a),
        Command::Compare(a) => commands::compare(a),
        Command::Design(a) => commands::design(a),
        Command::Eval(a) => commands::eval(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
