use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use conetrace_cli::commands::{self, Outcome, RunOptions};
use conetrace_cli::config::{Config, DEFAULTS_HELP};
use conetrace_cli::{report, CliError};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    /// Boundary spectrum, singular functions and θ tails
    Analyze,
    /// Scaling generator, stationarity verdicts and stationary domains
    Domains,
    /// Resolvent traces along the configured ray (CSV + JSON)
    TraceRay,
    /// Fit of the trace expansion, log detection, domain comparison
    Fit,
    /// Eigenvalues, heat trace fit and ζ pole table
    Zeta,
    /// Run the acceptance suite
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Domains => "domains",
            Command::TraceRay => "trace-ray",
            Command::Fit => "fit",
            Command::Zeta => "zeta",
            Command::Selftest => "selftest",
        }
    }
}

/// Spectral analysis of one-dimensional cone operators.
#[derive(Debug, Parser)]
#[command(name = "conetrace", version, after_help = DEFAULTS_HELP)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration (optional for selftest)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write SVG plots
    #[arg(long)]
    plot: bool,
    /// Worker threads for ray sampling [default: rayon's choice]
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory [default: output.dir, else current directory]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: &Cli) -> Result<(Option<Config>, Outcome), CliError> {
    let cfg = match &cli.config {
        Some(path) => Some(Config::load(path)?),
        None if matches!(cli.command, Command::Selftest) => None,
        None => return Err(CliError::Usage("--config is required".into())),
    };
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    let opts = RunOptions { plot: cli.plot || cfg.as_ref().is_some_and(|c| c.output.plot), threads: cli.threads };
    let result = match (cli.command, &cfg) {
        (Command::Selftest, _) => Ok(commands::selftest()),
        (Command::Analyze, Some(c)) => commands::analyze(c),
        (Command::Domains, Some(c)) => commands::domains(c),
        (Command::TraceRay, Some(c)) => commands::trace_ray(c, opts),
        (Command::Fit, Some(c)) => commands::fit(c, opts),
        (Command::Zeta, Some(c)) => commands::zeta(c, opts),
        (_, None) => unreachable!("config checked above"),
    };
    Ok((cfg, result?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, outcome) = match run(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("conetrace: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    for line in &outcome.log {
        eprintln!("{line}");
    }
    let doc = report::envelope(cli.command.name(), cfg.as_ref(), outcome.result);
    let text = report::to_text(&doc);
    print!("{text}");
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.output.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut files = vec![(format!("{}.json", cli.command.name()), text)];
    files.extend(outcome.files);
    for (name, contents) in &files {
        if let Err(e) = report::write(&dir, name, contents) {
            eprintln!("conetrace: {e}");
            return ExitCode::from(e.exit_code());
        }
    }
    if outcome.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
