use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rsdetect::corpus::{load_csv, save_csv, split};
use rsdetect::eval::{benchmark, evaluate, format_table};
use rsdetect::neural::{gradient_check, init_params, train_from, GradCheckConfig, TrainConfig};
use rsdetect::pipeline::{fit_pipeline, ModelKind, PipelineArtifact, RunConfig};
use rsdetect::synthetic::separable_dense;
use rsdetect::{Error, ErrorCategory};

#[derive(Parser)]
#[command(
    name = "rsdetect",
    version,
    about = "Depressive-content screening for Romanized Sinhala text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a labelled CSV into train.csv and test.csv.
    Split {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a pipeline on a CSV and save the artifact.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        /// Artifact path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved artifact on a labelled CSV.
    Evaluate {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Overrides the threshold stored in the artifact.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Classify texts given with --text, or one per line on stdin.
    Predict {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, required_unless_present = "stdin", conflicts_with = "stdin")]
        text: Option<String>,
        #[arg(long)]
        stdin: bool,
    },
    /// Fit and compare models on one shared split.
    Benchmark {
        #[command(flatten)]
        run: RunArgs,
        /// Models to compare (default: all).
        #[arg(long = "model", value_parser = parse_model)]
        models: Vec<ModelKind>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify backpropagation against central differences.
    Gradcheck {
        /// Size the network from this artifact's input width.
        #[arg(long)]
        artifact: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        input_dim: usize,
        #[arg(long, default_value_t = 512)]
        hidden: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Training epochs before the second check.
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Labelled CSV with `text,label` columns.
    #[arg(long)]
    input: PathBuf,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Train fraction.
    #[arg(long)]
    ratio: Option<f64>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(ratio) = self.ratio {
            config.split.train_ratio = ratio;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a command that is not a library error.
enum Failure {
    Lib(Error),
    Numeric(String),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Usage => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Numeric => 3,
            })
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_json(json: Result<String, serde_json::Error>) -> Result<(), Failure> {
    let json = json.map_err(Error::from)?;
    writeln!(io::stdout().lock(), "{json}")?;
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Split { run, out } => {
            let config = run.config()?;
            let corpus = load_csv(&run.input).map_err(Error::from)?;
            let corpus = if config.split.dedup {
                corpus.dedup()
            } else {
                corpus
            };
            let parts = split(&corpus, &config.split_spec()).map_err(Error::from)?;
            std::fs::create_dir_all(&out).map_err(|e| io_error(&out, e))?;
            save_csv(&parts.train, out.join("train.csv")).map_err(Error::from)?;
            save_csv(&parts.test, out.join("test.csv")).map_err(Error::from)?;
            println!(
                "train: {} documents, test: {} documents",
                parts.train.len(),
                parts.test.len()
            );
        }
        Command::Train { run, model, out } => {
            let config = run.config()?;
            let corpus = load_csv(&run.input).map_err(Error::from)?;
            let artifact = fit_pipeline(&corpus, &config, model)?;
            artifact.save(&out)?;
            println!(
                "trained {} on {} documents ({} features) -> {}",
                model.display_name(),
                corpus.len(),
                artifact.chain.output_dim(),
                out.display()
            );
        }
        Command::Evaluate {
            artifact,
            input,
            threshold,
            format,
        } => {
            let artifact = PipelineArtifact::load(&artifact)?;
            let test = load_csv(&input).map_err(Error::from)?;
            let report = evaluate(&artifact, &test, threshold.unwrap_or(artifact.threshold))?;
            match format {
                Format::Table => print!("{}", format_table(&[report], &[])),
                Format::Json => write_json(serde_json::to_string_pretty(&report))?,
            }
        }
        Command::Predict { artifact, text, .. } => {
            let artifact = PipelineArtifact::load(&artifact)?;
            let texts: Vec<String> = match text {
                Some(t) => vec![t],
                None => io::stdin().lock().lines().collect::<Result<_, _>>()?,
            };
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let mut out = io::stdout().lock();
            for p in artifact.predict(&refs)? {
                serde_json::to_writer(&mut out, &p).map_err(Error::from)?;
                writeln!(out)?;
            }
        }
        Command::Benchmark {
            run,
            models,
            format,
            out,
        } => {
            let config = run.config()?;
            let corpus = load_csv(&run.input).map_err(Error::from)?;
            let models = if models.is_empty() {
                ModelKind::ALL.to_vec()
            } else {
                models
            };
            let report = benchmark(&corpus, &config, &models)?;
            if let Some(path) = &out {
                let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
                std::fs::write(path, json + "\n").map_err(|e| io_error(path, e))?;
            }
            match format {
                Format::Table => print!("{}", format_table(&report.reports, &report.failures)),
                Format::Json => write_json(serde_json::to_string_pretty(&report))?,
            }
            if report.reports.is_empty() {
                return Err(Failure::Numeric("every model failed".into()));
            }
        }
        Command::Gradcheck {
            artifact,
            input_dim,
            hidden,
            samples,
            epochs,
            delta,
            tolerance,
            seed,
        } => {
            let (input_dim, hidden) = match artifact {
                Some(path) => {
                    let a = PipelineArtifact::load(&path)?;
                    let hidden = match &a.model {
                        rsdetect::classifiers::ModelArtifact::Mlp(m) => m.params().hidden,
                        _ => hidden,
                    };
                    (a.chain.output_dim(), hidden)
                }
                None => (input_dim, hidden),
            };
            let (x, y) = separable_dense(samples, input_dim, seed);
            let mut params = init_params(input_dim, hidden, seed).map_err(Error::from)?;
            let check = GradCheckConfig {
                delta,
                seed,
                ..Default::default()
            };
            let at_init = gradient_check(&params, &x, &y, &check).map_err(Error::from)?;
            let train = TrainConfig {
                epochs,
                hidden,
                seed,
                ..Default::default()
            };
            train_from(&x, &y, &train, &mut params).map_err(Error::from)?;
            let trained = gradient_check(&params, &x, &y, &check).map_err(Error::from)?;
            let mut ok = true;
            for (stage, report) in [
                ("init", &at_init),
                (&format!("after {epochs} epochs")[..], &trained),
            ] {
                let pass = report.passes(tolerance);
                ok &= pass;
                println!(
                    "{}  {stage}: max relative error {:.3e} over {} coordinates",
                    if pass { "PASS" } else { "FAIL" },
                    report.max_rel_error,
                    report.coordinates_checked
                );
            }
            if !ok {
                return Err(Failure::Numeric(format!(
                    "gradient check exceeded tolerance {tolerance}"
                )));
            }
        }
    }
    Ok(())
}

fn io_error(path: &Path, e: io::Error) -> Failure {
    Failure::Lib(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
