fn main() {
    std::process::exit(dubeval::cli::run(std::env::args_os()));
}
