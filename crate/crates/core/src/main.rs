fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QGRAPH_LOG", "warn")).init();
    std::process::exit(qgraph::cli::main_with_args(std::env::args_os()));
}
