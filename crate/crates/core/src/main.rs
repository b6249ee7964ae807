use std::process::ExitCode;

fn main() -> ExitCode {
    momentray::cli::main_with_args(std::env::args_os())
}
