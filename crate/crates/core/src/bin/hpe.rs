fn main() {
    std::process::exit(inertial_hpe::cli::main_from_env());
}
