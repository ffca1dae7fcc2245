fn main() {
    std::process::exit(nashseek_cli::run());
}
