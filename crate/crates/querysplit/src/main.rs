fn main() { querysplit::cli::main(); }
