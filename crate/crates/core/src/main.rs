fn main() {
    std::process::exit(symclone::cli::run(std::env::args_os()));
}
