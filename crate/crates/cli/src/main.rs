use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pathmeasure_cli::config::Command;

/// Path-integral experiments: Wiener and regularized Feynman cylinder
/// integrals, Bessel checks, radial propagator and perturbation series.
#[derive(Parser)]
#[command(name = "pathmeasure", version)]
struct Args {
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for result.csv and summary.txt.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Exit with status 4 when a feynman run does not converge.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match pathmeasure_cli::execute(args.command, &args.config, &args.out) {
        Ok(done) => {
            if done.converged == Some(false) {
                eprintln!("warning: regularized sequence did not converge");
            }
            ExitCode::from(done.exit_code(args.strict) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
