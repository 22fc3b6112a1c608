fn main() {
    env_logger::init();
    std::process::exit(steplearn_cli::run(std::env::args_os()));
}
