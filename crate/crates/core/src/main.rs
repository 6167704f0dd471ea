fn main() {
    std::process::exit(kmb09_sim::cli::main_with_args(std::env::args_os()));
}
