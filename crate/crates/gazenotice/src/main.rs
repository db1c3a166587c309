fn main() {
    std::process::exit(gazenotice::cli::run(std::env::args_os()));
}
