fn main() {
    std::process::exit(mirstat_service::cli::run(std::env::args_os()));
}
