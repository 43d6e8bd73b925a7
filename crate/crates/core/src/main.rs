fn main() {
    std::process::exit(ckm::cli::main_with_args(std::env::args_os()));
}
