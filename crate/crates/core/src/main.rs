fn main() {
    std::process::exit(ordtest::cli::main());
}
