use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use wristfuse_core::io::{read_params, Config};
use wristfuse_core::session;
use wristfuse_core::{AlgorithmId, CorpusSpec};

/// Dual-wrist step detection: simulate a corpus, tune, detect, evaluate.
#[derive(Debug, Parser)]
#[command(name = "wristfuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus and its manifest.
    Simulate {
        /// `default` for the 203-recording task mix, or a TOML config with a `[corpus]` table.
        #[arg(long, default_value = "default")]
        spec: String,
        /// Master seed; overrides the seed of a spec file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate parameter grids; writes cv_<alg>.json and params.json.
    Tune {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        algs: AlgArgs,
        #[arg(long)]
        folds: Option<usize>,
        /// Fold assignment seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run detectors over a corpus; writes detections_<alg>.csv.
    Detect {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        algs: AlgArgs,
        /// params.json from `tune`, or a single cv_<alg>.json.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score detections; writes summary.json and long-format CSVs.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        /// Directory holding detections_<alg>.csv.
        #[arg(long)]
        results: PathBuf,
        /// Defaults to every detection file present.
        #[arg(long = "alg", value_delimiter = ',', value_parser = parse_alg)]
        alg: Vec<AlgorithmId>,
        #[arg(long)]
        outlier_frac: Option<f64>,
        /// Add per-foot gait-phase offset columns.
        #[arg(long)]
        by_side: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the per-task error table of an evaluated session.
    Report {
        #[arg(long)]
        results: PathBuf,
    },
}

#[derive(Debug, Args)]
struct AlgArgs {
    /// left, right, sum, diff, intersect, union; repeat or comma-separate. Defaults to all.
    #[arg(long = "alg", value_delimiter = ',', value_parser = parse_alg)]
    alg: Vec<AlgorithmId>,
}

impl AlgArgs {
    fn resolve(&self) -> Vec<AlgorithmId> {
        if self.alg.is_empty() {
            AlgorithmId::ALL.to_vec()
        } else {
            dedup(&self.alg)
        }
    }
}

fn dedup(algs: &[AlgorithmId]) -> Vec<AlgorithmId> {
    let mut out: Vec<AlgorithmId> = algs.to_vec();
    out.sort();
    out.dedup();
    out
}

fn parse_alg(s: &str) -> std::result::Result<AlgorithmId, String> {
    s.parse().map_err(|e: wristfuse_core::Error| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config::default()),
    }
}

fn corpus_spec(spec: &str, seed: Option<u64>) -> Result<CorpusSpec> {
    let mut corpus = if spec == "default" {
        CorpusSpec::standard(seed.unwrap_or(0))
    } else {
        let path = Path::new(spec);
        let config = Config::load(path)?;
        match config.corpus {
            Some(c) => c,
            None => bail!("{}: no [corpus] table", path.display()),
        }
    };
    if let Some(seed) = seed {
        corpus.seed = seed;
    }
    Ok(corpus)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { spec, seed, out } => {
            let spec = corpus_spec(&spec, seed)?;
            let manifest = session::simulate(&spec, &out)?;
            println!("wrote {} recordings to {}", manifest.recordings.len(), out.display());
        }
        Command::Tune {
            corpus,
            out,
            algs,
            folds,
            seed,
            config,
        } => {
            let mut config = load_config(config.as_deref())?;
            if let Some(k) = folds {
                config.tuning.folds = k;
            }
            if let Some(s) = seed {
                config.tuning.seed = s;
            }
            let reports = session::tune(&corpus, &out, &config, &algs.resolve())?;
            for (alg, r) in &reports {
                println!("{alg:<10} mean held-out RMSE {:.3} steps", r.mean_test_rmse);
            }
        }
        Command::Detect {
            corpus,
            out,
            algs,
            params,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            let params = match params {
                Some(p) => read_params(&p)?,
                None if !config.params.is_empty() => config.params.clone(),
                None => bail!("no detector parameters: pass --params (e.g. params.json from `tune`) or a --config with [params.<alg>] tables"),
            };
            let algs = if algs.alg.is_empty() {
                params.keys().copied().collect()
            } else {
                algs.resolve()
            };
            let written = session::detect(&corpus, &out, &params, &algs)?;
            for path in written.values() {
                println!("wrote {}", path.display());
            }
        }
        Command::Evaluate {
            corpus,
            results,
            alg,
            outlier_frac,
            by_side,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            let frac = outlier_frac.unwrap_or(config.evaluation.outlier_frac);
            let algs = dedup(&alg);
            let selected = (!algs.is_empty()).then_some(algs.as_slice());
            let summary = session::evaluate(
                &corpus,
                &results,
                selected,
                frac,
                by_side || config.evaluation.phase_by_side,
            )?;
            println!(
                "evaluated {} recordings; wrote {}",
                summary.recordings,
                results.join(session::SUMMARY_FILE).display()
            );
        }
        Command::Report { results } => {
            print!("{}", session::report(&results)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
