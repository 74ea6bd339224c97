use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use domlab::cli::{execute, Command, Invocation};

#[derive(Parser)]
#[command(name = "domlab", version, about = "Numerical lab for dominated splittings on tori")]
struct Args {
    /// analyze | lyapunov | inflatability | disk-grow | hopf | product-structure | sweep | report
    command: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    system: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let inv = Invocation { config: args.config, seed: args.seed, out: args.out, threads: args.threads, system: args.system };
    let result = args.command.parse::<Command>().and_then(|c| execute(c, &inv));
    match result {
        Ok(report) => {
            let verdicts: Vec<String> = report.verdicts.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("{}: {}", report.command, verdicts.join(" "));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
