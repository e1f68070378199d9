use clap::Parser;

fn main() {
    let cli = fcfv::config::Cli::parse();
    if let Err(err) = fcfv::run::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
