fn main() {
    std::process::exit(mediaseries::cli::run(std::env::args_os()));
}
