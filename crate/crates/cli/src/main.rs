use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = robit_cli::args::Cli::parse();
    std::process::exit(robit_cli::execute(cli));
}
