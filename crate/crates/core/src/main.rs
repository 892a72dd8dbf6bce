fn main() {
    std::process::exit(subradiance::cli::main_with_args(std::env::args_os()));
}
