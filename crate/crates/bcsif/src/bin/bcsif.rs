fn main() {
    std::process::exit(bcsif::cli::run(std::env::args_os()));
}
