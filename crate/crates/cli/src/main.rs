fn main() {
    std::process::exit(openpop_cli::run(std::env::args_os()));
}
