use std::process::ExitCode;

fn main() -> ExitCode {
    kfringe::cli::main_with_args(std::env::args_os())
}
