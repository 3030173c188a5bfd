fn main() {
    std::process::exit(betatrace::cli::main_with_args(std::env::args_os()));
}
