fn main() {
    std::process::exit(jnsc::cli::run(std::env::args_os()));
}
