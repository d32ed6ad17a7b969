fn main() -> std::process::ExitCode {
    replisync::cli::main()
}
