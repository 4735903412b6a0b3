fn main() {
    std::process::exit(curre_cli::run(std::env::args_os()));
}
