fn main() {
    std::process::exit(coagfrag::cli::main());
}
