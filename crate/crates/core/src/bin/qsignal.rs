fn main() {
    std::process::exit(qsignal::cli::main());
}
