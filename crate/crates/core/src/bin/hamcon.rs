use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(hamming_concentration::cli::run(std::env::args_os()))
}
