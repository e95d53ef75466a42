fn main() -> std::process::ExitCode {
    swl::cli::main()
}
