fn main() {
    std::process::exit(keed_cli::run(std::env::args_os()));
}
