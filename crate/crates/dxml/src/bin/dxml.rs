fn main() {
    std::process::exit(dxml::cli::run(std::env::args_os()));
}
