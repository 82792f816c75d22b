fn main() {
    std::process::exit(rotorlab::cli::run(std::env::args_os()));
}
