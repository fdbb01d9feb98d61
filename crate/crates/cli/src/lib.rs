//! Command-line harness for the calibrators in `forecal-core`.

pub mod args;
pub mod benchmark;
pub mod svg;

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use forecal_core::data::{save_csv_with_columns, CsvTable};
use forecal_core::metrics::{bin_reliability, reliability_csv, EvalRecord, EvalReport};
use forecal_core::synthetic::{generate, save_with_rates, DistortionSpec};
use forecal_core::{load_csv, CalibrationDataset, Calibrator, Method};

use args::{ApplyArgs, BenchmarkArgs, Cli, Command, EvaluateArgs, FitArgs, ReliabilityArgs, SynthArgs};
use benchmark::{BenchmarkConfig, Source};

/// Invalid flag values detected after parsing; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Fit(a) => fit(&a),
        Command::Apply(a) => apply(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Reliability(a) => reliability(&a),
        Command::Benchmark(a) => run_benchmark(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_model(path: &Path) -> Result<Calibrator> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Calibrator::from_json(&text).with_context(|| format!("loading model {}", path.display()))
}

fn fit(a: &FitArgs) -> Result<()> {
    let options = a.params.fit_options(a.seed)?;
    let d = load_csv(&a.input)?;
    let model = Calibrator::fit(a.method, &d, &options)?;
    write_file(&a.out, &model.to_json()?)?;
    println!("method={} n={} {}", a.method, d.len(), model.summary());
    Ok(())
}

fn apply(a: &ApplyArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let d = load_csv(&a.input)?;
    let calibrated = model.apply(&d)?;
    save_csv_with_columns(&d, &[("p_cal", calibrated.probs())], &a.out)?;
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    if a.ece_bins == 0 {
        return Err(UsageError("--ece-bins must be at least 1".into()).into());
    }
    let table = CsvTable::read(&a.input)?;
    let before = table.dataset(&a.input)?;
    let (name, after) = match &a.model {
        Some(path) => {
            let model = load_model(path)?;
            (model.method().to_string(), model.apply(&before)?)
        }
        None => {
            let p_cal = table.numeric_column(&a.input, "p_cal")?;
            ("p_cal".to_string(), before.with_probs(p_cal)?)
        }
    };
    let report = EvalReport {
        records: vec![EvalRecord::compute(name, &before, &after, a.ece_bins)?],
    };
    print!("{}", report.to_csv());
    if let Some(out) = &a.out {
        write_file(out, &report.to_csv())?;
    }
    Ok(())
}

fn reliability(a: &ReliabilityArgs) -> Result<()> {
    if a.bins == 0 {
        return Err(UsageError("--bins must be at least 1".into()).into());
    }
    let table = CsvTable::read(&a.input)?;
    let base = table.dataset(&a.input)?;
    let d: CalibrationDataset = if a.column == "p" {
        base
    } else {
        base.with_probs(table.numeric_column(&a.input, &a.column)?)?
    };
    let bins = bin_reliability(&d, a.bins)?;
    write_file(&a.out, &reliability_csv(&bins))?;
    if let Some(path) = &a.svg {
        write_file(path, &svg::reliability_svg(&bins))?;
    }
    Ok(())
}

fn benchmark_config(a: &BenchmarkArgs) -> Result<BenchmarkConfig> {
    let mut sources = Vec::new();
    for path in &a.input {
        sources.push(Source::File {
            name: path.display().to_string(),
            data: load_csv(path)?,
        });
    }
    for &k in &a.k {
        sources.push(Source::Synthetic {
            spec: DistortionSpec::sigmoid(k),
            n_cal: a.n_cal,
            n_test: a.n_test,
        });
    }
    if sources.is_empty() {
        sources.push(Source::Synthetic {
            spec: DistortionSpec::sigmoid(3.0),
            n_cal: a.n_cal,
            n_test: a.n_test,
        });
    }
    let methods = if a.method.is_empty() { Method::ALL.to_vec() } else { a.method.clone() };
    let config = BenchmarkConfig {
        sources,
        methods,
        n_seeds: a.seeds,
        first_seed: a.seed,
        ece_bins: a.ece_bins,
        cal_fraction: a.cal_fraction,
        params: a.params.clone(),
    };
    config.validate()?;
    Ok(config)
}

fn run_benchmark(a: &BenchmarkArgs) -> Result<()> {
    let config = benchmark_config(a)?;
    let report = benchmark::run(&config)?;
    print!("{}", report.to_table());
    if let Some(out) = &a.out {
        write_file(out, &report.to_csv())?;
    }
    if let Some(detail) = &a.detail {
        write_file(detail, &report.detail_csv())?;
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let spec = a.spec()?;
    if a.n == 0 {
        return Err(UsageError("--n must be at least 1".into()).into());
    }
    let (d, q) = generate(a.n, &spec, a.seed)?;
    save_with_rates(&d, &q, &a.out)?;
    Ok(())
}
