fn main() {
    std::process::exit(pretzel::cli::run(std::env::args_os()));
}
