fn main() {
    std::process::exit(semtopo::cli::run(std::env::args_os()));
}
