fn main() { std::process::exit(homolog::cli_io::run()); }
