fn main() {
    std::process::exit(ilwp::cli::run(std::env::args_os()));
}
