fn main() { std::process::exit(pricedisc_core::cli::run()) }
