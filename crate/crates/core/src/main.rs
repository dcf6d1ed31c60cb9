fn main() {
    std::process::exit(npmix::cli::run(std::env::args_os()));
}
