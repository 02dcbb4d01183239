use std::process::ExitCode;

fn main() -> ExitCode {
    hipsynth::main_with_args(std::env::args_os())
}
