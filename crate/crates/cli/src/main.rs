fn main() {
    std::process::exit(polardoc_cli::run(std::env::args_os()));
}
