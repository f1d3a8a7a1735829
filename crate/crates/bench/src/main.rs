fn main() -> std::process::ExitCode {
    specmix_bench::cli::main()
}
