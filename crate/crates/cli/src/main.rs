fn main() {
    std::process::exit(betaflow_cli::run(std::env::args_os()));
}
