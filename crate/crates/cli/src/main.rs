fn main() {
    std::process::exit(plumber_cli::run(std::env::args_os()));
}
