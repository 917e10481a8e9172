use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(safecurrent_cli::run(std::env::args_os()))
}
