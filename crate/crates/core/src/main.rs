use clap::Parser;
use mimofb::cli::{self, Cli, CliInvocation};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let invocation = CliInvocation::from(Cli::parse());
    if let Err(e) = cli::run(invocation) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
