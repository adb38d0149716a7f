fn main() {
    std::process::exit(hubforge::cli::run(std::env::args_os()));
}
