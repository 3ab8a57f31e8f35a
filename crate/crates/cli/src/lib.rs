//! Command implementations behind the `toruse` binary.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;

pub use args::{Cli, Command};
pub use error::{exit, CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train(a) => commands::cmd_train(a).map(drop),
        Command::Eval(a) => commands::cmd_eval(a).map(drop),
        Command::Bench(a) => commands::cmd_bench(a).map(drop),
        Command::Inspect(a) => commands::cmd_inspect(a).map(drop),
        Command::Toy(a) => commands::cmd_toy(a).map(drop),
    }
}
