fn main() {
    std::process::exit(prelearn::cli::run_command(std::env::args_os()));
}
