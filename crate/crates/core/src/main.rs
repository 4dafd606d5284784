fn main() {
    std::process::exit(objnav::cli::run(std::env::args_os()));
}
