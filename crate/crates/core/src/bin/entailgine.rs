fn main() {
    env_logger::init();
    std::process::exit(entailgine::cli::main_entry());
}
