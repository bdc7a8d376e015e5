fn main() {
    std::process::exit(sarp::cli::run(std::env::args_os()));
}
