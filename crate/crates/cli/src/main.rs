fn main() {
    std::process::exit(mvcca_cli::run(std::env::args_os()));
}
