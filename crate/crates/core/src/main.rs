fn main() {
    std::process::exit(clcrec::cli::main_with_args(std::env::args_os()));
}
