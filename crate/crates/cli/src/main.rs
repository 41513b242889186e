use std::io;
use std::process::ExitCode;

use clap::Parser;
use qmachine_cli::{run_command, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run_command(&cli.command, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
