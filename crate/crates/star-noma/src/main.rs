fn main() {
    std::process::exit(star_noma::harness::cli_main());
}
