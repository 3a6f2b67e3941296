fn main() {
    std::process::exit(pytdg::cli::run(std::env::args_os()));
}
