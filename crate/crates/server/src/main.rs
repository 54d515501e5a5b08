fn main() -> std::process::ExitCode {
    cogkit_server::cli::main()
}
