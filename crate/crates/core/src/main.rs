fn main() {
    env_logger::init();
    std::process::exit(delone_rectify::cli::run_cli(std::env::args_os()));
}
