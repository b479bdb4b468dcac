use clap::Parser;

fn main() {
    let cli = tracedist::cli::Cli::parse();
    std::process::exit(tracedist::cli::run(cli));
}
