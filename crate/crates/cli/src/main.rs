use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(msg) = rsl_cli::init_thread_pool() {
        eprintln!("error: {msg}");
        return ExitCode::from(rsl_cli::EXIT_USAGE);
    }
    ExitCode::from(rsl_cli::run_cli(std::env::args_os()))
}
