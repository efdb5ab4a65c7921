fn main() {
    std::process::exit(amscheck_cli::run(std::env::args_os()));
}
