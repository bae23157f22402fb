use clap::Parser;

fn main() {
    std::process::exit(nesslab_cli::run(nesslab_cli::Cli::parse()));
}
