use clap::Parser;

use chansense_cli::CliError;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = chansense_cli::Cli::parse();
    if let Err(e) = chansense_cli::run(cli) {
        match &e {
            CliError::Core(chansense::Error::Validation(violations)) => {
                eprintln!("scenario is invalid:");
                for v in violations {
                    eprintln!("  {v}");
                }
            }
            _ => eprintln!("error: {e}"),
        }
        std::process::exit(e.exit_code());
    }
}
