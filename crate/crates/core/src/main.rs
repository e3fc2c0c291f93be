fn main() -> std::process::ExitCode {
    dequant_svt::cli::main()
}
