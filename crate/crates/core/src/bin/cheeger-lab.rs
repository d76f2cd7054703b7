fn main() {
    std::process::exit(cheeger_lab::cli::run(std::env::args_os()));
}
