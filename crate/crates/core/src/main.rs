fn main() {
    std::process::exit(rotcurl::cli::main_with_args(std::env::args_os()));
}
