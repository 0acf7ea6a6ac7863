use clap::Parser;

fn main() {
    let cli = pedcal_cli::Cli::parse();
    if let Err(e) = pedcal_cli::run(&cli) {
        eprintln!("pedcal: {e}");
        std::process::exit(e.exit_code());
    }
}
