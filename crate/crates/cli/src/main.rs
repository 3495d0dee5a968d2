use clap::Parser;
use rmf_cli::{execute, ExperimentConfig};

fn main() {
    // clap exits with status 2 on usage errors before anything is written
    let config = ExperimentConfig::parse();
    if let Err(e) = execute(&config) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
