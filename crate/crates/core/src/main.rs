fn main() {
    std::process::exit(stmaxwell::cli::parse_and_run(std::env::args_os()));
}
