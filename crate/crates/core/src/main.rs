use std::process::ExitCode;

fn main() -> ExitCode {
    cxr_labeler::cli::main_with_args(std::env::args_os())
}
