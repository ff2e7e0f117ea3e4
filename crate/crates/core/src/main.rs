fn main() {
    std::process::exit(plap_core::cli::main());
}
