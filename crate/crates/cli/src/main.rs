use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergavg_cli::config::parse_family;
use ergavg_cli::output::write_outputs;
use ergavg_cli::{exit, load_config, run, CliError, Status};
use ergavg_core::lattice::select_weights;
use ergavg_core::polys::check_nondegeneracy;

#[derive(Parser)]
#[command(name = "ergavg", version, about = "Polynomial multiple ergodic averages on model Z^d systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write series.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Overrides the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print weights and thresholds for a polynomial family file as JSON.
    SelectWeights { family: PathBuf },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn run_cmd(config: PathBuf, out: PathBuf, workers: usize, seed: Option<u64>) -> Result<Status, CliError> {
    let mut cfg = load_config(&config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let output = run(&cfg, workers)?;
    write_outputs(&out, &output)?;
    Ok(output.status)
}

fn select_weights_cmd(path: PathBuf) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let fam = parse_family(&text)?.build("family")?;
    match select_weights(&fam) {
        Ok(sel) => {
            println!("{}", serde_json::to_string_pretty(&sel).expect("serializable"));
            Ok(exit::PASS)
        }
        Err(e) => {
            let report = serde_json::json!({
                "error": e.to_string(),
                "nondegeneracy": check_nondegeneracy(&fam),
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            Ok(exit::CONFIG_ERROR)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => run_cmd(config, out, workers, seed).map(|s| match s {
            Status::Pass => exit::PASS,
            Status::Fail => exit::TOLERANCE_FAILED,
        }),
        Command::SelectWeights { family } => select_weights_cmd(family),
    };
    match result {
        Ok(c) => code(c),
        Err(e) => {
            eprintln!("error: {e}");
            code(exit::CONFIG_ERROR)
        }
    }
}
