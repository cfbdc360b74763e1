fn main() {
    std::process::exit(v2vbench::cli::main_with_args(std::env::args_os()));
}
