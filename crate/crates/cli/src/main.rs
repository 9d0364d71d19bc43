use clap::Parser;

fn main() {
    let cli = cotransport_cli::Cli::parse();
    std::process::exit(cotransport_cli::dispatch(&cli));
}
