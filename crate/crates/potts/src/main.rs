fn main() {
    std::process::exit(potts::cli::run(std::env::args_os()));
}
