fn main() {
    std::process::exit(confsub_cli::cli::main(std::env::args_os()));
}
