use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::init();
    blaar_harness::cli::main()
}
