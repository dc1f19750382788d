fn main() {
    std::process::exit(gridstrength::cli::main_with_args(std::env::args_os()));
}
