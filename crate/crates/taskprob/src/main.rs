fn main() {
    std::process::exit(taskprob::cli::run_cli(std::env::args_os()));
}
