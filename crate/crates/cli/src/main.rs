use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use factcheck_core::evalkit::{
    emit_report, evaluate, load_dataset, write_report, EvalOptions, EvalProvider, HeuristicProvider, MajorityProvider,
    OracleProvider, PipelineProvider, ReportFormat, SeededRandomProvider, Split, Task,
};
use factcheck_core::service::{serve, ServeError};
use factcheck_core::{LanguageTag, Pipeline, PipelineConfig};

/// Exit status for unreadable or invalid configuration and input files.
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "factcheck", version, about = "Multilingual fact-checking pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the REST API.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = Ipv4Addr::LOCALHOST.into())]
        host: std::net::IpAddr,
    },
    /// Fact-check one document and print the report as JSON.
    Check {
        /// Document file; `-` reads stdin.
        document: PathBuf,
        #[arg(long, default_value = "en")]
        language: String,
        /// Pipeline config; all-stub providers when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score a provider on a JSON-lines dataset.
    Eval {
        #[arg(long, value_parser = parse_task)]
        task: Task,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        provider: ProviderKind,
        /// Repetitions; defaults to 1 for deterministic providers and 3 otherwise.
        #[arg(long)]
        runs: Option<usize>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv", value_parser = parse_format)]
        format: ReportFormat,
        /// Only evaluate records of this split.
        #[arg(long, value_parser = parse_split)]
        split: Option<Split>,
        /// Score Uncertain predictions as wrong instead of dropping them.
        #[arg(long)]
        uncertain_as_wrong: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pipeline config for `--provider pipeline`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    Oracle,
    Majority,
    Random,
    Heuristic,
    Pipeline,
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse()
}

/// A failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: e.to_string() }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

fn load_pipeline(config: Option<&PathBuf>) -> Result<Pipeline, Failure> {
    let cfg = match config {
        Some(path) => PipelineConfig::load(path).map_err(Failure::config)?,
        None => PipelineConfig::stub(),
    };
    Pipeline::from_config(&cfg).map_err(Failure::config)
}

async fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Serve { config, port, host } => {
            let cfg = PipelineConfig::load(&config).map_err(Failure::config)?;
            match serve(&cfg, SocketAddr::new(host, port)).await {
                Ok(()) => Ok(()),
                Err(e @ ServeError::Config(_)) => Err(Failure::config(e)),
                Err(e) => Err(Failure::runtime(e)),
            }
        }
        Command::Check { document, language, config } => {
            let language = LanguageTag::parse(&language).map_err(Failure::config)?;
            let text = if document.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin()).map_err(Failure::runtime)?
            } else {
                std::fs::read_to_string(&document)
                    .map_err(|e| Failure::config(format!("reading {}: {e}", document.display())))?
            };
            let pipeline = load_pipeline(config.as_ref())?;
            let report = pipeline.run_pipeline(&text, &language).await.map_err(Failure::runtime)?;
            let json = serde_json::to_string_pretty(&report).map_err(Failure::runtime)?;
            println!("{json}");
            Ok(())
        }
        Command::Eval { task, data, provider, runs, out, format, split, uncertain_as_wrong, seed, config } => {
            let mut records = load_dataset(&data, task).map_err(|e| Failure::config(format!("{}: {e}", data.display())))?;
            if let Some(split) = split {
                records.retain(|r| r.split == split);
            }
            let provider: Box<dyn EvalProvider> = match provider {
                ProviderKind::Oracle => Box::new(OracleProvider),
                // fitted on the records being scored, i.e. the majority baseline of that split
                ProviderKind::Majority => Box::new(MajorityProvider::fit(&records)),
                ProviderKind::Random => Box::new(SeededRandomProvider::new(seed)),
                ProviderKind::Heuristic => Box::new(HeuristicProvider),
                ProviderKind::Pipeline => {
                    let cfg = match &config {
                        Some(path) => PipelineConfig::load(path).map_err(Failure::config)?,
                        None => PipelineConfig::stub(),
                    };
                    let deterministic = cfg.llm.is_stub() || cfg.llm.seed.is_some();
                    let pipeline = Pipeline::from_config(&cfg).map_err(Failure::config)?;
                    Box::new(PipelineProvider::new(Arc::new(pipeline), deterministic))
                }
            };
            let runs = runs.unwrap_or(if provider.is_deterministic() { 1 } else { 3 });
            let report = evaluate(&records, provider.as_ref(), task, runs, EvalOptions { uncertain_as_wrong })
                .await
                .map_err(Failure::config)?;
            match out {
                Some(path) => emit_report(&report, format, &path).map_err(Failure::runtime)?,
                None => write_report(&report, format, std::io::stdout().lock()).map_err(Failure::runtime)?,
            }
            tracing::info!(provider = %report.provider, languages = report.languages.len(), "evaluation done");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("FACTCHECK_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let rt = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: starting runtime: {e}");
            return ExitCode::FAILURE;
        }
    };
    match rt.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
