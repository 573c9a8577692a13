fn main() {
    std::process::exit(mcqdebias::cli::run_from_env());
}
