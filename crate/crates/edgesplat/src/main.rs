use std::process::ExitCode;

fn main() -> ExitCode {
    match edgesplat::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", edgesplat::cli::error_line(&e));
            match e {
                edgesplat::Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
