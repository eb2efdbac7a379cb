fn main() {
    std::process::exit(lagmmse_cli::run(std::env::args_os()));
}
