fn main() {
    std::process::exit(progquant::bench::cli::run(std::env::args_os()));
}
