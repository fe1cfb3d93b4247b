fn main() {
    std::process::exit(cvmaxcut_cli::run(std::env::args_os()));
}
