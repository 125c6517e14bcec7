fn main() {
    std::process::exit(cusp_reflect::cli::main_with(std::env::args_os()));
}
