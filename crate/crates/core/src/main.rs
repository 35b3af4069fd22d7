fn main() {
    std::process::exit(deep_transform::cli::run(std::env::args_os()));
}
