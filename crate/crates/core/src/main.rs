use clap::Parser;
use memsa::cli::{self, Cli};

fn main() {
    let result = cli::run(Cli::parse());
    if let Err(e) = &result {
        eprintln!("memsa: {e}");
    }
    std::process::exit(cli::exit_code(&result));
}
