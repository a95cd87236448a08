use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = causal_geometry::cli::Cli::parse();
    std::process::exit(causal_geometry::cli::main_with(cli));
}
