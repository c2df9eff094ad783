use clap::Parser;

fn main() {
    let cli = twi_cli::Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = twi_cli::run(&cli, &mut stdout.lock()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
