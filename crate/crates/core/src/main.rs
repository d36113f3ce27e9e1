fn main() {
    std::process::exit(exclusion_lab::harness::cli_main(std::env::args_os()));
}
