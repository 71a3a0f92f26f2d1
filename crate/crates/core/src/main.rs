use std::process::ExitCode;

fn main() -> ExitCode {
    repeater_core::cli::main_with_args(std::env::args_os())
}
