fn main() {
    std::process::exit(relgen::cli::run(std::env::args_os()));
}
