fn main() {
    std::process::exit(chancode::cli::run(std::env::args_os()));
}
