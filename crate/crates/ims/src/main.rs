use clap::Parser;

fn main() {
    std::process::exit(ims::cli::run(ims::cli::Cli::parse()));
}
