use clap::Parser;

use pca_cli::cli::{run, Cli};

fn main() {
    // Clap itself exits with code 2 on unparsable flags, matching the
    // usage-error contract; semantic failures are mapped below.
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
