use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = kelly_core::cli::run(std::env::args(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(outcome.exit_code as u8)
}
