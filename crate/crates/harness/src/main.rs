fn main() {
    std::process::exit(capillary_harness::cli::run(std::env::args_os()));
}
