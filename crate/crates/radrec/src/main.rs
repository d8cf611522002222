fn main() {
    std::process::exit(radrec::cli::run(std::env::args_os()));
}
