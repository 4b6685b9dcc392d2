use std::process::ExitCode;

fn main() -> ExitCode {
    concomp::cli::run()
}
