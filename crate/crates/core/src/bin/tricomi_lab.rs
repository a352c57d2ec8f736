use clap::Parser;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cli = tricomi_lab::cli::Cli::parse();
    std::process::exit(tricomi_lab::cli::run(cli, args));
}
