fn main() {
    std::process::exit(gglopt::cli::run(std::env::args_os()));
}
