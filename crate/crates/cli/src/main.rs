use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

#[derive(Parser)]
#[command(name = "linkage-tune", version)]
#[command(about = "Exact parameter sweeps for interpolated linkage clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw synthetic instances and write them with a seed manifest
    Generate(Common),
    /// Compute the exact piecewise loss of every instance
    Sweep(Common),
    /// Average loss curves and pick the best parameter
    Erm(Common),
    /// Run one fixed parameter and print the tree and its loss
    Eval(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; the subcommand reads its own section
    config: PathBuf,

    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: available parallelism)
    #[arg(long)]
    jobs: Option<usize>,

    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Any config key, as `--key value`
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--KEY VALUE"
    )]
    overrides: Vec<String>,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad config, arguments or paths: exit code 2.
    Usage(String),
    /// Failure while processing valid input: exit code 3.
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Generate(c) => ("generate", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Erm(c) => ("erm", c),
        Command::Eval(c) => ("eval", c),
    };
    let result = commands::load(name, common).and_then(|config| match cli.command {
        Command::Generate(_) => commands::generate(&config),
        Command::Sweep(_) => commands::sweep(&config),
        Command::Erm(_) => commands::erm(&config),
        Command::Eval(_) => commands::eval(&config),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
