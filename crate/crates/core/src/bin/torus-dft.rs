fn main() {
    std::process::exit(torus_dft::cli::run(std::env::args_os()));
}
