fn main() {
    std::process::exit(corrclust::cli::run(std::env::args_os()));
}
