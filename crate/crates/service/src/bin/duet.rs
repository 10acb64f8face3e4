use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(duet_service::cli::main_with_args(std::env::args_os()))
}
