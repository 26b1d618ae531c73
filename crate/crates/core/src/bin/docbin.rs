fn main() {
    std::process::exit(docbin::cli::run(std::env::args_os()));
}
