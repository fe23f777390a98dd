fn main() {
    std::process::exit(sdma_thp::cli::main_with_args(std::env::args_os()));
}
