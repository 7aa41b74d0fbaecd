fn main() {
    std::process::exit(qec3_core::cli::main_from_env());
}
