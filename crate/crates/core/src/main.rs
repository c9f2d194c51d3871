fn main() {
    std::process::exit(lingdiv::cli::run(std::env::args_os()));
}
