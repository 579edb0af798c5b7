fn main() {
    std::process::exit(svrrg_bench::cli::main_with_args(std::env::args_os()));
}
