fn main() {
    std::process::exit(rplab::cli::run(std::env::args_os()));
}
