fn main() {
    std::process::exit(gmm_intraday::cli::main_with_args(std::env::args_os()));
}
