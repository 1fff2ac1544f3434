fn main() {
    std::process::exit(chaindecon_cli::run(std::env::args_os()));
}
