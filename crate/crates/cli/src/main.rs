use clap::Parser;
use privseq_cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = privseq_cli::run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
