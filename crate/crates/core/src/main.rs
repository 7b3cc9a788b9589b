fn main() {
    std::process::exit(avg_core::cli::run(std::env::args_os()));
}
