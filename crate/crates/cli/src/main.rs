fn main() {
    std::process::exit(surrogate_dfl_cli::run(std::env::args_os()));
}
