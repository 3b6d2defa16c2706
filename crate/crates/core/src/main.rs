fn main() {
    std::process::exit(nonlocal_shape::cli::main_with_args(std::env::args_os()));
}
