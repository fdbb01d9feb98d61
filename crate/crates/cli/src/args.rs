use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use forecal_core::baselines::FitOptions;
use forecal_core::synthetic::{Distortion, DistortionSpec};
use forecal_core::{ForecalConfig, Method, SplitSpec};

use crate::UsageError;

#[derive(Debug, Parser)]
#[command(name = "forecal", version, about = "Post-hoc probability calibration toolkit")]
pub struct Cli {
    /// Worker threads for parallel work (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a calibrator on a `p,y` CSV and save the model
    Fit(FitArgs),
    /// Calibrate a `p,y` CSV with a saved model, writing `p,y,p_cal`
    Apply(ApplyArgs),
    /// ECE and AUC before and after calibration
    Evaluate(EvaluateArgs),
    /// Reliability diagram data (and optionally an SVG plot)
    Reliability(ReliabilityArgs),
    /// Multi-seed comparison of calibrators
    Benchmark(BenchmarkArgs),
    /// Generate a synthetic miscalibrated dataset as `p,y,q`
    Synth(SynthArgs),
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

fn parse_distortion(s: &str) -> Result<Distortion, String> {
    s.parse::<Distortion>().map_err(|e| e.to_string())
}

/// Calibrator hyperparameters shared by `fit` and `benchmark`.
#[derive(Debug, Clone, Args)]
pub struct CalibratorFlags {
    /// Equal-width bins for forecal and histogram binning
    #[arg(long)]
    pub bins: Option<usize>,
    /// Bootstrap resamples per bin (forecal)
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Trees in the forecal forest
    #[arg(long)]
    pub trees: Option<usize>,
    /// Minimum samples per forest leaf
    #[arg(long = "min-leaf")]
    pub min_leaf: Option<usize>,
}

impl CalibratorFlags {
    /// Fit options with forecal's random streams keyed on `seed`.
    pub fn fit_options(&self, seed: u64) -> Result<FitOptions, UsageError> {
        let mut forecal = ForecalConfig::with_seed(seed);
        if let Some(b) = self.bins {
            forecal.n_bins = b;
        }
        if let Some(p) = self.bootstrap {
            forecal.n_bootstrap = p;
        }
        if let Some(t) = self.trees {
            forecal.forest.n_trees = t;
        }
        if let Some(m) = self.min_leaf {
            forecal.forest.min_samples_leaf = m;
        }
        forecal.validate().map_err(|e| UsageError(e.to_string()))?;
        let histogram_bins = self.bins.unwrap_or(forecal_core::metrics::DEFAULT_BINS);
        Ok(FitOptions {
            histogram_bins,
            forecal,
        })
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV with `p,y` columns
    #[arg(long)]
    pub input: PathBuf,
    /// Calibration method: platt, temperature, isotonic, histogram, bbq, forecal
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    /// Where to write the fitted model (JSON)
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub params: CalibratorFlags,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// CSV with `p,y` and either a `p_cal` column or a `--model` to apply
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "ece-bins", default_value_t = 10)]
    pub ece_bins: usize,
    /// Also write the report as CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReliabilityArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Probability column to bin (`p`, or e.g. `p_cal` from `apply`)
    #[arg(long, default_value = "p")]
    pub column: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an SVG reliability plot
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Prediction CSVs to benchmark on; each is re-split per seed
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Synthetic severities to benchmark on (sigmoid distortion of the logit)
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<f64>,
    /// Calibrators to compare (comma separated; default all)
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub method: Vec<Method>,
    /// Number of seeds
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// First seed; seeds run from here upward
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "ece-bins", default_value_t = 10)]
    pub ece_bins: usize,
    /// Calibration share of each input CSV
    #[arg(long = "cal-fraction", default_value_t = SplitSpec::DEFAULT_CALIBRATION_FRACTION)]
    pub cal_fraction: f64,
    /// Calibration-set size for synthetic runs
    #[arg(long = "n-cal", default_value_t = 20_000)]
    pub n_cal: usize,
    /// Test-set size for synthetic runs
    #[arg(long = "n-test", default_value_t = 20_000)]
    pub n_test: usize,
    /// Report CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-seed records CSV path
    #[arg(long)]
    pub detail: Option<PathBuf>,
    #[command(flatten)]
    pub params: CalibratorFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Distortion severity (logit scale for the sigmoid kinds, offset for shift)
    #[arg(long, default_value_t = 3.0)]
    pub k: f64,
    /// overconfident, underconfident or shift (default: inferred from k)
    #[arg(long, value_parser = parse_distortion)]
    pub distortion: Option<Distortion>,
    #[arg(long = "beta-a", default_value_t = 2.0)]
    pub beta_a: f64,
    #[arg(long = "beta-b", default_value_t = 2.0)]
    pub beta_b: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn spec(&self) -> Result<DistortionSpec, UsageError> {
        let mut spec = match self.distortion {
            Some(Distortion::Shift) => DistortionSpec::shift(self.k),
            Some(kind) => DistortionSpec { kind, ..DistortionSpec::sigmoid(self.k) },
            None => DistortionSpec::sigmoid(self.k),
        };
        spec.beta_a = self.beta_a;
        spec.beta_b = self.beta_b;
        spec.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(spec)
    }
}
