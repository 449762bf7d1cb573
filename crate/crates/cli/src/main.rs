use clap::Parser;

fn main() {
    let cli = mginf_cli::Cli::parse();
    std::process::exit(mginf_cli::run(&cli));
}
