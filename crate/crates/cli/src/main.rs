fn main() {
    std::process::exit(cpmkit_cli::run());
}
