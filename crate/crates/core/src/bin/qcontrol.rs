fn main() {
    std::process::exit(qcontrol::cli::run(std::env::args_os()));
}
