use clap::Parser;

fn main() {
    let cli = radam_lab::cli::Cli::parse();
    if let Err(e) = radam_lab::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
