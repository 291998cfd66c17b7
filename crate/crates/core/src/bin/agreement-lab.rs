fn main() {
    std::process::exit(agreement_lab::cli::run(std::env::args_os()));
}
