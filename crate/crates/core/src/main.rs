use std::process::ExitCode;

fn main() -> ExitCode {
    batchsched::cli::main()
}
