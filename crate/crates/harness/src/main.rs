use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zerofid::{cmd_fit, cmd_report, cmd_run, format_fit, with_workers, HarnessError};

#[derive(Parser)]
#[command(name = "zerofid", version, about = "Zero-fidelity benchmarking experiments")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Where to write outputs, overriding the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Fit F(m) = A0 p^m + B0 to a points CSV.
    Fit {
        csv: PathBuf,
        /// Register size; read from a sibling result.json when omitted.
        #[arg(long)]
        qubits: Option<usize>,
    },
    /// Compare fitted decays across result directories.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    let out = cli.output_dir.as_deref();
    match cli.command {
        Command::Run { config } => {
            let (dir, result) = with_workers(cli.workers, || cmd_run(&config, out))??;
            for p in &result.points {
                println!("m={:<4} mean={:.6} stderr={:.2e}", p.m, p.mean, p.stderr);
            }
            if let Some(f) = &result.fit {
                print!("{}", format_fit(f));
            }
            if let Some(g) = result.gate_fidelity {
                println!("gate fidelity {g:.6}");
            }
            println!("wrote {}", dir.display());
        }
        Command::Fit { csv, qubits } => {
            let (path, fit) = cmd_fit(&csv, qubits, out)?;
            print!("{}", format_fit(&fit));
            println!("wrote {}", path.display());
        }
        Command::Report { dirs } => print!("{}", cmd_report(&dirs)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
