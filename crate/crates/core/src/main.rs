fn main() {
    std::process::exit(orbitglue::cli::run(std::env::args_os()));
}
