fn main() {
    std::process::exit(arith_okounkov_cli::run(std::env::args_os()));
}
