use clap::Parser;

fn main() {
    let args = polyga_cli::Args::parse();
    std::process::exit(polyga_cli::run(&args));
}
