fn main() {
    std::process::exit(heartbeat::cli::main_with_args(std::env::args_os()));
}
