fn main() {
    std::process::exit(spellkit::cli::run(std::env::args_os()));
}
