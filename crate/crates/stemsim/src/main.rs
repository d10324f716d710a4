fn main() {
    std::process::exit(stemsim::cli::run_from(std::env::args_os()));
}
