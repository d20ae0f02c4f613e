fn main() {
    std::process::exit(spatiolog::cli::run(std::env::args_os()));
}
