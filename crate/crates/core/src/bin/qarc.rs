fn main() {
    std::process::exit(qarc::cli::main_with_args(std::env::args_os()));
}
