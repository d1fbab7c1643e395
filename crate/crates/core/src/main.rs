fn main() {
    std::process::exit(risqr::cli::run(std::env::args_os()));
}
