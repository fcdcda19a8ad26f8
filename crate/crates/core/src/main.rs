fn main() {
    std::process::exit(fmdeploy::cli::run());
}
