use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infrashare_cli::{
    emit, load_config, preset, run_experiment, validation_config, write_table, CliError, ExperimentConfig, Format,
    Result,
};

/// Default output directory when neither `--out` nor the configuration
/// names a file.
const OUT_DIR_VAR: &str = "INFRASHARE_OUT_DIR";

#[derive(Parser)]
#[command(name = "infrashare", version, about = "Infrastructure sharing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the configuration's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the Monte Carlo trial count.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Output file; stdout if absent and INFRASHARE_OUT_DIR is unset.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format; defaults to the output file's extension, else csv.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration.
    Run { config: PathBuf },
    /// Run a shipped preset, fig2 to fig9.
    Preset { name: String },
    /// Monte Carlo cross-check of a configuration's scenario.
    Validate { config: PathBuf },
}

fn apply_overrides(cli: &Cli, mut config: ExperimentConfig) -> Result<ExperimentConfig> {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err(CliError::invalid("--trials", "must be at least 1"));
        }
        config.simulation.trials = trials;
    }
    Ok(config)
}

fn destination(cli: &Cli, config: &ExperimentConfig) -> (Option<PathBuf>, Format) {
    let dir = std::env::var_os(OUT_DIR_VAR).map(PathBuf::from);
    let path = cli.out.clone().or_else(|| match (&config.output, &dir) {
        (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(d)) => Some(d.join(format!("{}.{}", config.name, cli.format.unwrap_or(Format::Csv).extension()))),
        (None, None) => None,
    });
    let format = cli
        .format
        .or_else(|| path.as_deref().and_then(Format::from_path))
        .unwrap_or(Format::Csv);
    (path, format)
}

fn run(cli: &Cli) -> Result<()> {
    let config = match &cli.command {
        Command::Run { config } => load_config(config)?,
        Command::Preset { name } => preset(name)?,
        Command::Validate { config } => validation_config(&load_config(config)?),
    };
    let config = apply_overrides(cli, config)?;
    let table = run_experiment(&config)?;
    match destination(cli, &config) {
        (Some(path), format) => emit(&table, format, &path),
        (None, format) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_table(&table, format, &mut lock)?;
            lock.flush().map_err(|source| CliError::Io {
                path: Path::new("<stdout>").to_path_buf(),
                source,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", serde_json::json!({ "error": { "kind": "usage", "message": first } }));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
