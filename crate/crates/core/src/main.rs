fn main() {
    std::process::exit(glmvi::harness::cli_main(std::env::args_os()));
}
