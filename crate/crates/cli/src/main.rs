//! Command-line driver for the iris-recognition pipeline: corpus synthesis,
//! feature extraction, PCA training, evaluation, identification, and
//! latency benchmarking.
//!
//! Exit codes: 0 success, 1 input error, 2 internal invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(
    name = "scatiris",
    version,
    about = "Iris recognition via scattering + texture features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration sources shared by commands that run the extractor.
/// Flags win over the config file; the file wins over built-in defaults.
#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// TOML pipeline configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Working image width
    #[arg(long)]
    width: Option<usize>,
    /// Working image height
    #[arg(long)]
    height: Option<usize>,
    /// Scattering scales J
    #[arg(long)]
    scales: Option<u32>,
    /// Scattering orientations p
    #[arg(long)]
    orientations: Option<u32>,
    /// Scattering depth m (0..=2)
    #[arg(long)]
    layers: Option<u32>,
    /// Texture block grid, e.g. 4x3
    #[arg(long, value_parser = commands::parse_grid)]
    grid: Option<(usize, usize)>,
    /// Gray levels per texture block
    #[arg(long)]
    levels: Option<usize>,
    /// Co-occurrence offset, e.g. 1,0
    #[arg(long, value_parser = commands::parse_offset)]
    offset: Option<(i32, i32)>,
    /// Disable the texture feature block
    #[arg(long)]
    no_texture: bool,
    /// Luma-convert color (P6) input instead of rejecting it
    #[arg(long)]
    luma: bool,
    /// Standardize features before PCA
    #[arg(long)]
    standardize: bool,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the deterministic synthetic corpus with a train/test split
    Synth {
        /// Output directory for images and manifest.tsv
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long = "per-class", default_value_t = 10)]
        per_class: usize,
        /// Additive pixel noise level
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Per-subject training fraction
        #[arg(long = "train-fraction", default_value_t = 0.5)]
        train_fraction: f64,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Extract feature vectors for every manifest entry
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for .scir feature files
        #[arg(long)]
        out: PathBuf,
        /// Worker pool size (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
        /// Also dump per-block Haralick CSVs into this directory
        #[arg(long = "texture-csv")]
        texture_csv: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Fit PCA on the train split and enroll the training templates
    Train {
        /// Directory of .scir feature files
        #[arg(long)]
        features: PathBuf,
        /// Retained-variance target (overrides the embedded config)
        #[arg(long)]
        epsilon: Option<f64>,
        /// Explicit PCA component count (overrides epsilon)
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "out-model")]
        out_model: PathBuf,
        #[arg(long = "out-gallery")]
        out_gallery: PathBuf,
    },
    /// Score the test split and emit the accuracy report
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        gallery: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated component counts for the accuracy curve
        #[arg(long = "k-grid", default_value = "1,5,10,20,40,80")]
        k_grid: String,
        /// JSON report path
        #[arg(long)]
        out: PathBuf,
        /// CSV curve path (default: report path with .csv extension)
        #[arg(long = "out-csv")]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Identify a single probe image; prints `subject_id distance`
    Identify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        gallery: PathBuf,
        #[arg(long)]
        image: PathBuf,
    },
    /// Measure per-image extract+match latency
    Bench {
        /// Directory of .pgm probe images
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth {
            out,
            classes,
            per_class,
            noise,
            train_fraction,
            config,
        } => commands::synth(&out, classes, per_class, noise, train_fraction, &config),
        Command::Extract {
            manifest,
            out,
            threads,
            texture_csv,
            config,
        } => commands::extract(&manifest, &out, threads, texture_csv.as_deref(), &config),
        Command::Train {
            features,
            epsilon,
            k,
            out_model,
            out_gallery,
        } => commands::train(&features, epsilon, k, &out_model, &out_gallery),
        Command::Evaluate {
            model,
            gallery,
            manifest,
            k_grid,
            out,
            out_csv,
            threads,
        } => commands::evaluate(
            &model,
            &gallery,
            &manifest,
            &k_grid,
            &out,
            out_csv.as_deref(),
            threads,
        ),
        Command::Identify {
            model,
            gallery,
            image,
        } => commands::identify(&model, &gallery, &image),
        Command::Bench {
            images,
            reps,
            config,
        } => commands::bench(&images, reps, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<scatiris::Error>()
                .map_or(1, scatiris::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
