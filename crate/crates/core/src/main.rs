fn main() -> std::process::ExitCode {
    drillscope::cli::main()
}
