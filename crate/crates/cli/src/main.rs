use clap::Parser;
use gazeref::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(f) = run(cli) {
        eprintln!("{}", f.to_json());
        std::process::exit(1);
    }
}
