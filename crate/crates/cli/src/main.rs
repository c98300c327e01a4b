fn main() -> std::process::ExitCode {
    ibbm_cli::main_with_args(std::env::args_os())
}
