fn main() {
    std::process::exit(wq::cli::main_with_args(std::env::args_os()));
}
