fn main() {
    std::process::exit(flag_gluer::cli::main_with_args(std::env::args_os()));
}
