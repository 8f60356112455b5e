fn main() {
    std::process::exit(hdrcnn::cli::run(std::env::args_os()));
}
