fn main() {
    std::process::exit(casimir_core::cli::main_with_args(std::env::args_os()));
}
