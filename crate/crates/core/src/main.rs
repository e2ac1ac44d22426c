fn main() {
    std::process::exit(qms::cli::run());
}
