fn main() {
    std::process::exit(damctl_cli::run(std::env::args_os()));
}
