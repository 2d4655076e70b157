fn main() {
    std::process::exit(dicmine::cli::main());
}
