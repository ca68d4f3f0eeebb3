fn main() -> std::process::ExitCode {
    c2s_lab::cli::main_with(std::env::args_os())
}
