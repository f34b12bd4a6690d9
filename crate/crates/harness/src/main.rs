fn main() {
    std::process::exit(ascl_harness::run_cli(std::env::args_os()));
}
