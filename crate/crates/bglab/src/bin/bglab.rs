fn main() {
    std::process::exit(bglab::cli::run());
}
