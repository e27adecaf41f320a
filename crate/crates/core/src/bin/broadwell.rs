fn main() {
    std::process::exit(broadwell::cli::main_entry(std::env::args_os()));
}
