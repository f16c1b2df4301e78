fn main() {
    std::process::exit(sparse_mclass::cli::run(std::env::args_os()));
}
