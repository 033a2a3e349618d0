fn main() -> std::process::ExitCode {
    microstrain::cli::main()
}
