fn main() {
    std::process::exit(hostcap::cli::run(std::env::args_os()));
}
