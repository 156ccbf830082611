fn main() {
    std::process::exit(filtlab::cli::main_with_args(std::env::args_os()));
}
