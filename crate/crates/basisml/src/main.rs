fn main() {
    std::process::exit(basisml::cli::run_from_env());
}
