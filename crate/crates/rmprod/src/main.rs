fn main() {
    std::process::exit(rmprod::cli::main_with_args(std::env::args_os()));
}
