fn main() {
    std::process::exit(entroflow_cli::run(std::env::args_os()));
}
