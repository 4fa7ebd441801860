use std::process::ExitCode;

fn main() -> ExitCode {
    climate_stance::cli::run_command(std::env::args_os())
}
