fn main() {
    std::process::exit(msr_core::cli::run(std::env::args_os()));
}
