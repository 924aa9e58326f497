use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(incpar_cli::run(std::env::args_os()) as u8)
}
