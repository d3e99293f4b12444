fn main() {
    std::process::exit(magic_flatness::cli::main_with_args(std::env::args_os()));
}
