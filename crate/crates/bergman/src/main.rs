fn main() {
    std::process::exit(bergman::cli::main_entry());
}
