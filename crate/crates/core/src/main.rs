fn main() {
    std::process::exit(mlbalance::cli::run(std::env::args_os()));
}
