use clap::Parser;
use lexlearn::cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    run(Cli::parse())
}
