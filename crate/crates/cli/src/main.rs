fn main() {
    std::process::exit(logtrawl_cli::main_with_args(std::env::args_os()));
}
