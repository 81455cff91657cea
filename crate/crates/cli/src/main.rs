use std::process::ExitCode;

use clap::Parser;
use rqnet_cli::args::Cli;

fn main() -> ExitCode {
    rqnet_cli::run(Cli::parse())
}
