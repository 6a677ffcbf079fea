fn main() {
    std::process::exit(pzk_cli::run(std::env::args_os()));
}
