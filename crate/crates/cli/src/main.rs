mod args;
mod commands;
mod error;

use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use error::CliError;

fn main() {
    let cli = Cli::parse();
    let (name, result) = match &cli.command {
        Command::Synth(a) => ("synth", commands::synth(a)),
        Command::Fit(a) => ("fit", commands::fit(a)),
        Command::Produce(a) => ("produce", commands::produce(a)),
        Command::Search(a) => ("search", commands::search(a)),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        if matches!(e, CliError::Usage(_)) {
            let mut cmd = Cli::command();
            cmd.build();
            if let Some(sub) = cmd.find_subcommand_mut(name) {
                eprintln!("\n{}", sub.render_usage());
            }
        }
        std::process::exit(e.exit_code());
    }
}
