fn main() {
    std::process::exit(glyphfactor_cli::run(std::env::args_os()));
}
