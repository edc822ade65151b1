use clap::Parser;

fn main() {
    let cli = conceptgrad::cli::Cli::parse();
    if let Err(e) = conceptgrad::cli::execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
