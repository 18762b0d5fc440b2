fn main() {
    std::process::exit(imatch_cli::run(std::env::args_os()));
}
