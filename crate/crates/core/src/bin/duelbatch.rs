fn main() {
    std::process::exit(duelbatch::harness::cli::cli_main(std::env::args_os()));
}
