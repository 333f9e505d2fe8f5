//! Command-line interface for training, tuning, prediction, simulation, and
//! benchmarking.
//!
//! Exit codes: 0 success, 2 file or I/O problems, 3 invalid data or
//! arguments, 4 solver failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fdwd::benchmark::BenchmarkConfig;
use fdwd::curves::LabeledDataset;
use fdwd::datagen::ScenarioSpec;
use fdwd::error::Error;
use fdwd::loss::loss_curve_samples;
use fdwd::solver::SolverConfig;
use fdwd::tuning::TuningGrid;
use fdwd::{cross_validate, generate, run_benchmark, DwdModel};

#[derive(Parser)]
#[command(
    name = "fdwd",
    version,
    about = "Margin classifier for functional data with scalar covariates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model at fixed hyperparameters.
    Fit(FitArgs),
    /// Score new curves with a saved model.
    Predict(PredictArgs),
    /// Cross-validate over a (q, lambda) grid and report the surface.
    Cv(CvArgs),
    /// Draw a synthetic dataset from one of the built-in scenarios.
    Simulate(SimulateArgs),
    /// Replicated tune/fit/test study on synthetic data.
    Benchmark(BenchmarkArgs),
    /// Tabulate the margin loss for plotting.
    PlotLoss(PlotLossArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Curve CSV: first row is the grid, later rows are curves.
    #[arg(long)]
    curves: PathBuf,
    /// Label file, one +1 or -1 per line.
    #[arg(long)]
    labels: PathBuf,
    /// Optional scalar-covariate CSV, one row per subject.
    #[arg(long)]
    scalars: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    lambda: f64,
    /// Where to write the fitted model (JSON).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    scalars: Option<PathBuf>,
    /// Where to write predicted labels, one per line.
    #[arg(long)]
    output: PathBuf,
    /// Optionally also write raw decision scores, one per line.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated q grid; defaults to 0.5,1,2,4,8.
    #[arg(long, value_delimiter = ',')]
    q_values: Option<Vec<f64>>,
    /// Comma-separated lambda grid; defaults to 1e-8..1e-1 log-spaced.
    #[arg(long, value_delimiter = ',')]
    lambda_values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Seed for the fold shuffle.
    #[arg(long)]
    seed: u64,
    /// Where to write the report (JSON).
    #[arg(long)]
    output: PathBuf,
    /// Additionally write the mean error surface as CSV (first row = lambda
    /// grid, one later row per q).
    #[arg(long)]
    surface: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario number, 1 or 2.
    #[arg(long)]
    scenario: u8,
    /// Number of subjects.
    #[arg(long)]
    n: usize,
    /// Include the two scalar covariates.
    #[arg(long)]
    with_scalars: bool,
    #[arg(long)]
    seed: u64,
    /// Directory for curves.csv, labels.csv, and optionally scalars.csv.
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    scenario: u8,
    #[arg(long)]
    with_scalars: bool,
    #[arg(long, default_value_t = 100)]
    n_train: usize,
    #[arg(long, default_value_t = 500)]
    n_test: usize,
    #[arg(long, default_value_t = 50)]
    replications: usize,
    #[arg(long)]
    seed: u64,
    /// Worker threads for replications.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_delimiter = ',')]
    q_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lambda_values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Where to write the report (JSON).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct PlotLossArgs {
    /// Comma-separated q values, one curve per value.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4,8")]
    q_values: Vec<f64>,
    /// Margin range lower end.
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    u_min: f64,
    /// Margin range upper end.
    #[arg(long, default_value_t = 3.0)]
    u_max: f64,
    #[arg(long, default_value_t = 501)]
    points: usize,
    /// Output CSV: first row = margin grid, one later row per q.
    #[arg(long)]
    output: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 2,
        Error::SolverSingular | Error::NotSymmetric(_) => 4,
        _ => 3,
    }
}

fn load_dataset(args: &DataArgs) -> fdwd::Result<LabeledDataset> {
    let curves = fdwd::io::read_curves(&args.curves)?;
    let labels = fdwd::io::read_labels(&args.labels)?;
    let scalars = args
        .scalars
        .as_deref()
        .map(fdwd::io::read_scalars)
        .transpose()?;
    LabeledDataset::new(curves, labels, scalars)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> fdwd::Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
    fdwd::io::atomic_write(path, json.as_bytes())
}

fn grid_from(
    q_values: Option<Vec<f64>>,
    lambda_values: Option<Vec<f64>>,
    folds: usize,
) -> TuningGrid {
    let defaults = TuningGrid::default();
    TuningGrid {
        q_values: q_values.unwrap_or(defaults.q_values),
        lambda_values: lambda_values.unwrap_or(defaults.lambda_values),
        folds,
    }
}

fn run(cli: Cli) -> fdwd::Result<()> {
    match cli.command {
        Command::Fit(args) => {
            let data = load_dataset(&args.data)?;
            let cfg = SolverConfig::new(args.q, args.lambda)?;
            let model = DwdModel::fit_with_config(&data, &cfg)?;
            if !model.diagnostics.converged {
                log::warn!(
                    "solver stopped at the iteration cap ({} iterations)",
                    model.diagnostics.iterations
                );
            }
            model.save(&args.output)?;
            println!(
                "fit: n={} objective={:.6} iterations={} converged={}",
                data.len(),
                model.diagnostics.objective,
                model.diagnostics.iterations,
                model.diagnostics.converged
            );
        }
        Command::Predict(args) => {
            let model = DwdModel::load(&args.model)?;
            let curves = fdwd::io::read_curves(&args.curves)?;
            let scalars = args
                .scalars
                .as_deref()
                .map(fdwd::io::read_scalars)
                .transpose()?;
            if let Some(z) = &scalars {
                if z.nrows() != curves.len() {
                    return Err(Error::Shape(format!(
                        "{} curves but {} scalar rows",
                        curves.len(),
                        z.nrows()
                    )));
                }
            }
            let mut labels = Vec::with_capacity(curves.len());
            let mut scores = Vec::with_capacity(curves.len());
            for (i, curve) in curves.iter().enumerate() {
                let row: Option<Vec<f64>> = scalars
                    .as_ref()
                    .map(|z| z.row(i).iter().copied().collect());
                let s = model.decision_score(curve, row.as_deref())?;
                scores.push(s);
                labels.push(if s >= 0.0 { 1i8 } else { -1 });
            }
            fdwd::io::write_labels(&args.output, &labels)?;
            if let Some(p) = &args.scores {
                let text: String = scores.iter().map(|s| format!("{s:.17}\n")).collect();
                fdwd::io::atomic_write(p, text.as_bytes())?;
            }
            println!("predict: scored {} curves", curves.len());
        }
        Command::Cv(args) => {
            let data = load_dataset(&args.data)?;
            let grid = grid_from(args.q_values, args.lambda_values, args.folds);
            let cfg = SolverConfig::new(1.0, 1e-4)?.with_stopping(1e-6, 500);
            let result = cross_validate(&data, &grid, &cfg, args.seed)?;
            write_json(&args.output, &result)?;
            if let Some(p) = &args.surface {
                let mut text = result
                    .lambda_values
                    .iter()
                    .map(|l| format!("{l:.17}"))
                    .collect::<Vec<_>>()
                    .join(",");
                text.push('\n');
                for row in &result.error_surface {
                    text.push_str(
                        &row.iter()
                            .map(|e| format!("{e:.17}"))
                            .collect::<Vec<_>>()
                            .join(","),
                    );
                    text.push('\n');
                }
                fdwd::io::atomic_write(p, text.as_bytes())?;
            }
            println!(
                "cv: best q={} lambda={:e} error={:.4}",
                result.best_q,
                result.best_lambda,
                result.best_error()
            );
        }
        Command::Simulate(args) => {
            let spec = ScenarioSpec::new(args.scenario, args.n, args.with_scalars, args.seed)?;
            let sample = generate(&spec)?;
            std::fs::create_dir_all(&args.output_dir)?;
            let data = &sample.data;
            fdwd::io::write_curves(
                &args.output_dir.join("curves.csv"),
                data.grid(),
                data.curves(),
            )?;
            fdwd::io::write_labels(&args.output_dir.join("labels.csv"), data.labels())?;
            if let Some(z) = data.scalars() {
                fdwd::io::write_scalars(&args.output_dir.join("scalars.csv"), z)?;
            }
            println!(
                "simulate: wrote {} subjects to {}",
                data.len(),
                args.output_dir.display()
            );
        }
        Command::Benchmark(args) => {
            let mut cfg =
                BenchmarkConfig::new(args.scenario, args.with_scalars, args.n_train, args.seed)?;
            cfg.n_test = args.n_test;
            cfg.replications = args.replications;
            cfg.jobs = args.jobs;
            cfg.grid = grid_from(args.q_values, args.lambda_values, args.folds);
            let report = run_benchmark(&cfg)?;
            write_json(&args.output, &report)?;
            let bayes = report
                .bayes_error
                .map(|(b, _)| format!("{b:.4}"))
                .unwrap_or_else(|| "-".into());
            println!(
                "benchmark: mean error {:.4} (sd {:.4}, se {:.4}) over {} replications; bayes {}; {:.1}s",
                report.mean_error,
                report.sd_across_replications,
                report.se_of_mean,
                report.replications.len(),
                bayes,
                report.wall_clock_secs
            );
        }
        Command::PlotLoss(args) => {
            if args.points < 2 || !(args.u_min < args.u_max) {
                return Err(Error::InvalidData(
                    "need at least 2 points and u_min < u_max".into(),
                ));
            }
            let us: Vec<f64> = (0..args.points)
                .map(|i| {
                    args.u_min
                        + (args.u_max - args.u_min) * i as f64 / (args.points - 1) as f64
                })
                .collect();
            let mut text = us
                .iter()
                .map(|u| format!("{u:.17}"))
                .collect::<Vec<_>>()
                .join(",");
            text.push('\n');
            for &q in &args.q_values {
                let samples = loss_curve_samples(fdwd::LossParam::new(q)?, &us);
                text.push_str(
                    &samples
                        .iter()
                        .map(|(_, v)| format!("{v:.17}"))
                        .collect::<Vec<_>>()
                        .join(","),
                );
                text.push('\n');
            }
            fdwd::io::atomic_write(&args.output, text.as_bytes())?;
            println!(
                "plot-loss: wrote {} curves over {} points",
                args.q_values.len(),
                args.points
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
