fn main() {
    env_logger::init();
    std::process::exit(flowsched_cli::run(std::env::args_os()));
}
