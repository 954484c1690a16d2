fn main() -> std::process::ExitCode {
    delegate_rla::cli::run()
}
