use std::path::PathBuf;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "brink",
    version,
    about = "Bound states and threshold behaviour of well-plus-tail potentials"
)]
struct Args {
    #[arg(value_enum)]
    command: brink_cli::Command,
    /// Run configuration (flat `dotted.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, env = "BRINK_WORKERS")]
    workers: Option<usize>,
}

fn main() {
    let args = Args::parse();
    std::process::exit(brink_cli::run(
        args.command,
        &args.config,
        args.out,
        args.workers,
    ));
}
