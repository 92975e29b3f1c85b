fn main() {
    std::process::exit(plqs_cli::run(std::env::args_os()));
}
