fn main() {
    std::process::exit(isac::cli::run_command(std::env::args_os()));
}
