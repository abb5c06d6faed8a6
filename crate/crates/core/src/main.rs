fn main() -> std::process::ExitCode {
    qrev::cli::main_with_args(std::env::args_os())
}
