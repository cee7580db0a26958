fn main() {
    std::process::exit(svie_cli::run(std::env::args_os()));
}
