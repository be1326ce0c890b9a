fn main() {
    std::process::exit(realpos_cli::run(std::env::args_os()));
}
