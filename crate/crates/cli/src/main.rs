use clap::Parser;
use sns_cli::{run, Cli};

fn main() {
    std::process::exit(run(&Cli::parse()));
}
