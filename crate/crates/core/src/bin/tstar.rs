fn main() {
    std::process::exit(tstar::cli::run(std::env::args_os()));
}
