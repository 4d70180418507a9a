fn main() {
    std::process::exit(mpet_core::cli::run(std::env::args_os()));
}
