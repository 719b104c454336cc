use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(xfmr_aging_cli::run(std::env::args_os()))
}
