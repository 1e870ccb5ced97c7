fn main() {
    std::process::exit(pconvex_cli::run_from_env());
}
