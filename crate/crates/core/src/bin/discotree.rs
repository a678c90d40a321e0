fn main() {
    std::process::exit(discotree::cli::run_from(std::env::args_os()));
}
