fn main() {
    std::process::exit(dgopt::cli::run(std::env::args_os()));
}
