fn main() {
    tomochm::cli::init_logging();
    std::process::exit(tomochm::cli::main_with(std::env::args_os()));
}
