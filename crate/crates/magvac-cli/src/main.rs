fn main() {
    std::process::exit(magvac_cli::run(std::env::args_os()));
}
