fn main() {
    std::process::exit(adrank_sim::cli::run(std::env::args_os()));
}
