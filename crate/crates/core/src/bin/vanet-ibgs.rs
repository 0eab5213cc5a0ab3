fn main() -> std::process::ExitCode {
    env_logger::init();
    vanet_ibgs::harness::cli::run(std::env::args_os())
}
