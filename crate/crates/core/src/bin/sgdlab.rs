fn main() {
    std::process::exit(sgdlab::cli::run(std::env::args_os()));
}
