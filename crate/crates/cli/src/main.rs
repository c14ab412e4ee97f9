fn main() {
    std::process::exit(ddkf_cli::run_cli(std::env::args_os()));
}
