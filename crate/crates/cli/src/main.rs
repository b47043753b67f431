fn main() {
    std::process::exit(fqavc_cli::main_with(std::env::args_os()));
}
