fn main() { std::process::exit(edc_core::cli::main_entry()) }
