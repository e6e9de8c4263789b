fn main() {
    std::process::exit(scalegen::cli::main_entry());
}
